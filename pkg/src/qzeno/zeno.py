"""Repeated-measurement product formulas and their Dirichlet limit."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dynamics import DirichletBasis, dirichlet_evolve, free_propagate, project
from .phase_space import PhysicalParams, SpatialGrid, WaveFunction
from .symbols import MollifiedIndicator, Region, build_mollifier

__all__ = [
    "ZenoConfig",
    "ZenoRow",
    "ZenoReport",
    "ProductTrace",
    "NormalizationError",
    "gaussian_state",
    "product_formula_state",
    "product_formula_trace",
    "survival_probability",
    "zeno_error",
    "regularized_product_state",
    "run_zeno",
    "iter_zeno",
]

NORM_TOL = 1e-10


class NormalizationError(ValueError):
    """A normalized state was required."""


def gaussian_state(grid: SpatialGrid, center: float, width: float,
                   momentum: float = 0.0, params: PhysicalParams | None = None) -> WaveFunction:
    """Normalized ``exp(-(x-c)^2/(4 w^2) + i p x/hbar)``; ``width`` is the position spread."""
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    x = grid.nodes
    phase = 0.0 if momentum == 0 else momentum * x / (params or PhysicalParams()).hbar
    psi = np.exp(-((x - center) ** 2) / (4 * width**2) + 1j * phase)
    return WaveFunction(grid, psi).normalize()


@dataclass(frozen=True, eq=False)
class ProductTrace:
    """Result of the product formula with per-projection bookkeeping.

    ``norms2[k]`` is the squared norm after the ``k``-th projection (the
    first entry follows the initial projection) and ``leaked[k]`` is the
    squared norm removed by it.
    """

    state: WaveFunction
    norms2: np.ndarray
    leaked: np.ndarray

    @property
    def survival(self) -> float:
        return float(self.norms2[-1])

    def normalized_state(self) -> WaveFunction:
        return self.state.normalize()


def _check_N(N: int):
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")


def product_formula_trace(psi: WaveFunction, N: int, t: float, projector,
                          params: PhysicalParams) -> ProductTrace:
    """``(P U(t/N))^N P psi`` with the norm after every projection."""
    _check_N(N)
    norms, leaked = [], []
    before = psi.norm2()
    cur = project(psi, projector)
    for step in range(N + 1):
        if step:
            cur = free_propagate(cur, t / N, params)
            before = cur.norm2()
            cur = project(cur, projector)
        after = cur.norm2()
        norms.append(after)
        leaked.append(before - after)
    return ProductTrace(cur, np.array(norms), np.array(leaked))


def product_formula_state(psi: WaveFunction, N: int, t: float, projector,
                          params: PhysicalParams) -> WaveFunction:
    """``V_N(t) psi``: project, then ``N`` times [evolve by ``t/N``, project]. Not renormalized."""
    return product_formula_trace(psi, N, t, projector, params).state


def survival_probability(psi: WaveFunction, N: int, t: float, projector,
                         params: PhysicalParams) -> float:
    """Joint probability of finding the particle in the region at all measurements."""
    if abs(psi.norm2() - 1.0) > NORM_TOL:
        raise NormalizationError(f"state has norm^2 {psi.norm2():.12g}, expected 1")
    return product_formula_trace(psi, N, t, projector, params).survival


def zeno_error(psi: WaveFunction, N: int, t: float, projector, params: PhysicalParams,
               basis: DirichletBasis) -> float:
    """``|| V_N(t) psi - exp(-i t H_region/hbar) P psi ||``."""
    limit = dirichlet_evolve(project(psi, basis.region), basis, t)
    return (product_formula_state(psi, N, t, projector, params) - limit).norm()


def regularized_product_state(psi: WaveFunction, N: int, t: float,
                              projector, params: PhysicalParams) -> tuple[WaveFunction, float]:
    """Heisenberg-picture product ``P(t) P((N-1)t/N) ... P(0) psi`` and its identity residual.

    ``P(s) = U(-s) P U(s)``.  Path (a) applies these factors right to left;
    path (b) is ``U(-t) V_N(t) psi``.  Returns (a) and ``||(a) - (b)||``.
    """
    _check_N(N)
    cur = psi
    for k in range(N + 1):
        s = k * t / N
        cur = free_propagate(project(free_propagate(cur, s, params), projector), -s, params)
    other = free_propagate(product_formula_state(psi, N, t, projector, params), -t, params)
    return cur, (cur - other).norm()


@dataclass(frozen=True)
class ZenoConfig:
    region: Region
    params: PhysicalParams
    grid: SpatialGrid
    state: dict
    t: float
    N_list: tuple
    projector: str = "sharp"
    eps: float | None = None  # mollified only; None picks max(1/N^3, floor)

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"t must be positive, got {self.t}")
        ns = tuple(int(n) for n in self.N_list)
        if not ns or any(n < 1 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError(f"N_list must be strictly increasing positive integers, got {self.N_list}")
        object.__setattr__(self, "N_list", ns)
        if self.projector not in ("sharp", "mollified"):
            raise ValueError(f"projector must be 'sharp' or 'mollified', got {self.projector!r}")

    def initial_state(self) -> WaveFunction:
        kind = self.state.get("kind", "gaussian")
        if kind == "gaussian":
            return gaussian_state(self.grid, self.state.get("center", 0.5),
                                  self.state.get("width", 0.08),
                                  self.state.get("momentum", 0.0), self.params)
        if kind == "dirichlet_mode":
            k = int(self.state.get("k", 1))
            basis = DirichletBasis(self.region, self.grid, self.params, k)
            return WaveFunction(self.grid, basis.functions[k - 1]).normalize()
        raise ValueError(f"unknown state kind {kind!r}")

    def cutoff(self, N: int):
        if self.projector == "sharp":
            return self.region
        return build_mollifier(self.region, N, self.eps, grid=self.grid)


@dataclass(frozen=True)
class ZenoRow:
    N: int
    p_N: float
    e_N: float
    reg_residual: float
    eps: float  # 0 for the sharp projector
    wall_ms: float


@dataclass(frozen=True, eq=False)
class ZenoReport:
    config: ZenoConfig
    rows: list = field(default_factory=list)
    convergence: str = "empirical"

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def iter_zeno(config: ZenoConfig, residual_max_N: int = 32,
              basis: DirichletBasis | None = None):
    """Yield one :class:`ZenoRow` per ``N`` (see :func:`run_zeno`)."""
    psi = config.initial_state()
    if basis is None:
        basis = DirichletBasis.for_state(psi, config.region, config.params)
    limit = dirichlet_evolve(project(psi, config.region), basis, config.t)
    for N in config.N_list:
        start = time.perf_counter()
        cut = config.cutoff(N)
        trace = product_formula_trace(psi, N, config.t, cut, config.params)
        e_N = (trace.state - limit).norm()
        if N <= residual_max_N:
            _, res = regularized_product_state(psi, N, config.t, cut, config.params)
        else:
            res = float("nan")
        eps = cut.eps if isinstance(cut, MollifiedIndicator) else 0.0
        yield ZenoRow(N, trace.survival, e_N, res, eps, 1e3 * (time.perf_counter() - start))


def run_zeno(config: ZenoConfig, residual_max_N: int = 32,
             basis: DirichletBasis | None = None) -> ZenoReport:
    """Survival, distance to the Dirichlet limit and the identity residual for each ``N``.

    The residual needs ``N + 1`` extra propagation pairs, so it is only
    computed for ``N <= residual_max_N`` (NaN otherwise).
    """
    return ZenoReport(config, list(iter_zeno(config, residual_max_N, basis)))
