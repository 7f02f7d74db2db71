"""Quantum Zeno product formulas, Weyl calculus on periodic grids, and the
semiclassical symbol hierarchy of the regularized product."""

__version__ = "0.1.0"

from .phase_space import (  # noqa: E402
    PhaseSpaceGrid,
    PhysicalParams,
    SpatialGrid,
    Symbol,
    WaveFunction,
    make_grid,
)
from .symbols import MollifiedIndicator, Region, build_mollifier, escape_time  # noqa: E402

__all__ = [
    "__version__",
    "PhaseSpaceGrid",
    "PhysicalParams",
    "SpatialGrid",
    "Symbol",
    "WaveFunction",
    "make_grid",
    "MollifiedIndicator",
    "Region",
    "build_mollifier",
    "escape_time",
]
