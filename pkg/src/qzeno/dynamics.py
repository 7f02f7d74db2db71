"""Free quantum propagation, classical flow, symbol transport, and the
Dirichlet-confined evolution inside the measured region."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .phase_space import PhaseSpaceGrid, PhysicalParams, SpatialGrid, Symbol, WaveFunction
from .quantization import OperatorMatrix
from .symbols import MollifiedIndicator, Region

__all__ = [
    "BoundaryMassError",
    "CaptureError",
    "FlowExitError",
    "FlowMap",
    "DirichletBasis",
    "TransportedSymbol",
    "boundary_mass",
    "free_propagate",
    "propagator_matrix",
    "classical_flow",
    "heisenberg_symbol",
    "dirichlet_evolve",
    "project",
    "BOUNDARY_FRACTION",
    "BOUNDARY_MASS_THRESHOLD",
    "CAPTURE_THRESHOLD",
]

BOUNDARY_FRACTION = 0.1
BOUNDARY_MASS_THRESHOLD = 1e-8
CAPTURE_THRESHOLD = 1e-8
GRAM_TOL = 1e-8
RANGE_TOL = 1e-10


class BoundaryMassError(RuntimeError):
    """Probability reached the edge of the periodic box (wrap-around contamination)."""


class CaptureError(RuntimeError):
    """The Dirichlet basis misses too much of the projected state."""


class FlowExitError(ValueError):
    """Transporting a symbol would push its support across the periodic boundary."""


def boundary_mass(psi: WaveFunction) -> float:
    """Fraction of ``|psi|^2`` within ``BOUNDARY_FRACTION * L`` of the box edge."""
    g = psi.grid
    total = psi.norm2()
    if total == 0:
        return 0.0
    edge = np.abs(g.nodes) >= (1 - BOUNDARY_FRACTION) * g.half_width
    return float(np.sum(np.abs(psi.values[edge]) ** 2) * g.dx / total)


def _guard(psi: WaveFunction, when: str):
    frac = boundary_mass(psi)
    if frac > BOUNDARY_MASS_THRESHOLD:
        raise BoundaryMassError(f"boundary mass {frac:.3g} exceeds "
                                f"{BOUNDARY_MASS_THRESHOLD:g} {when} propagation")


def _kinetic_phase(grid: SpatialGrid, t: float, params: PhysicalParams) -> np.ndarray:
    k = grid.fft_k
    return np.exp(-1j * params.hbar * k * k * t / (2 * params.mass))


def free_propagate(psi: WaveFunction, t: float, params: PhysicalParams,
                   check_boundary: bool = True) -> WaveFunction:
    """``exp(-i t H / hbar) psi`` for ``H = -hbar^2/(2m) d^2/dx^2`` on the periodic box."""
    if psi.space != "x":
        raise ValueError("free_propagate expects a position-space state")
    if check_boundary:
        _guard(psi, "before")
    if t == 0:
        return psi
    out = psi.with_values(np.fft.ifft(np.fft.fft(psi.values) * _kinetic_phase(psi.grid, t, params)))
    if check_boundary:
        _guard(out, "after")
    return out


def propagator_matrix(grid: SpatialGrid, t: float, params: PhysicalParams) -> OperatorMatrix:
    """Dense ``U(t)`` on the grid (columns are propagated unit vectors)."""
    eye = np.eye(grid.points)
    cols = np.fft.ifft(np.fft.fft(eye, axis=0) * _kinetic_phase(grid, t, params)[:, None], axis=0)
    return OperatorMatrix(grid, cols)


def classical_flow(x, xi, t: float, params: PhysicalParams):
    """Free Hamiltonian flow ``(x, xi) -> (x + xi t/m, xi)``."""
    return x + xi * t / params.mass, xi


@dataclass(frozen=True)
class FlowMap:
    params: PhysicalParams
    t: float

    def __call__(self, x, xi):
        return classical_flow(x, xi, self.t, self.params)

    def then(self, other: "FlowMap") -> "FlowMap":
        if other.params != self.params:
            raise ValueError("flows with different parameters do not compose")
        return FlowMap(self.params, self.t + other.t)

    def inverse(self) -> "FlowMap":
        return FlowMap(self.params, -self.t)

    @staticmethod
    def jacobian_determinant() -> float:
        # d(x + xi t/m, xi)/d(x, xi) = [[1, t/m], [0, 1]]
        return 1.0


@dataclass(frozen=True, eq=False)
class TransportedSymbol:
    """Heisenberg-evolved symbol; ``method`` records how values were obtained."""

    symbol: Symbol
    method: str

    @property
    def interpolated(self) -> bool:
        return self.method != "closed_form"


def heisenberg_symbol(tau, t: float, params: PhysicalParams,
                      grid: PhaseSpaceGrid | None = None,
                      range_tol: float = RANGE_TOL) -> TransportedSymbol:
    """Symbol of ``U(t)^* Op(tau) U(t)``, i.e. ``tau o flow_t``.

    ``tau`` is either a :class:`MollifiedIndicator` (evaluated in closed form
    on ``grid``) or a :class:`Symbol` (shifted along x row by row through
    its trigonometric interpolant).  For the latter, entries above
    ``range_tol`` times the peak must not be carried across the box edge.
    """
    if isinstance(tau, MollifiedIndicator):
        if grid is None:
            raise ValueError("a grid is required to sample a mollifier")
        X, XI = grid.mesh()
        x_t, _ = classical_flow(X, XI, t, params)
        return TransportedSymbol(Symbol(grid, tau(x_t)), "closed_form")
    if not isinstance(tau, Symbol):
        raise TypeError(f"cannot transport {type(tau).__name__}")
    g = tau.grid
    if t == 0:
        return TransportedSymbol(tau, "closed_form")
    shift = g.xi_axis.nodes * t / params.mass
    _check_flow_range(tau, shift, range_tol)
    coeffs = np.fft.fft(tau.values, axis=0)
    phase = np.exp(1j * np.outer(g.x_axis.fft_k, shift))
    phase[g.x_axis.points // 2] = np.cos(np.pi / g.x_axis.dx * shift)
    return TransportedSymbol(Symbol(g, np.fft.ifft(coeffs * phase, axis=0)), "fourier_shift")


def _check_flow_range(tau: Symbol, shift: np.ndarray, tol: float):
    g = tau.grid
    mag = np.abs(tau.values)
    floor = tol * max(mag.max(initial=0.0), 1e-300)
    x = g.x_axis.nodes
    L = g.x_axis.half_width
    for col in range(g.xi_axis.points):
        live = np.nonzero(mag[:, col] > floor)[0]
        if live.size == 0:
            continue
        lo, hi = x[live[0]] - shift[col], x[live[-1]] - shift[col]
        if lo < -L or hi >= L:
            raise FlowExitError(f"flow carries the support at xi={g.xi_axis.nodes[col]:.4g} "
                                f"to [{lo:.4g}, {hi:.4g}], outside the grid")


def project(psi: WaveFunction, cutoff) -> WaveFunction:
    """Multiply by the sharp indicator of a :class:`Region` or by a mollified cutoff."""
    if isinstance(cutoff, Region):
        return psi.with_values(psi.values * cutoff.indicator(psi.grid.nodes))
    if isinstance(cutoff, MollifiedIndicator):
        return psi.with_values(psi.values * cutoff(psi.grid.nodes))
    raise TypeError(f"unsupported cutoff {type(cutoff).__name__}")


@dataclass(frozen=True, eq=False)
class DirichletBasis:
    """Sine eigenbasis of the Dirichlet Laplacian on ``region``, sampled on ``grid``."""

    region: Region
    grid: SpatialGrid
    params: PhysicalParams
    modes: int

    def __post_init__(self):
        if int(self.modes) != self.modes or self.modes < 1:
            raise ValueError(f"modes must be a positive integer, got {self.modes}")
        err = self.gram_error
        if err > GRAM_TOL:
            raise ValueError(f"sampled sine modes are not orthonormal on this grid "
                             f"(Gram error {err:.3g}); align the region ends with grid nodes")

    @cached_property
    def functions(self) -> np.ndarray:
        """Array of shape ``(K, M)``, zero outside the region."""
        x = self.grid.nodes
        a, d = self.region.a, self.region.diameter
        inside = self.region.indicator(x)
        k = np.arange(1, self.modes + 1)[:, None]
        phi = np.sqrt(2 / d) * np.sin(k * np.pi * (x[None, :] - a) / d) * inside[None, :]
        phi.setflags(write=False)
        return phi

    @cached_property
    def energies(self) -> np.ndarray:
        k = np.arange(1, self.modes + 1)
        d = self.region.diameter
        return self.params.hbar**2 * np.pi**2 * k**2 / (2 * self.params.mass * d**2)

    @cached_property
    def gram_error(self) -> float:
        phi = self.functions
        gram = phi @ phi.T * self.grid.dx
        return float(np.max(np.abs(gram - np.eye(self.modes))))

    def coefficients(self, psi: WaveFunction) -> np.ndarray:
        return self.functions @ psi.values * self.grid.dx

    def synthesize(self, coeffs: np.ndarray) -> WaveFunction:
        return WaveFunction(self.grid, coeffs @ self.functions)

    @classmethod
    def for_state(cls, psi: WaveFunction, region: Region, params: PhysicalParams,
                  threshold: float = CAPTURE_THRESHOLD) -> "DirichletBasis":
        """Smallest basis capturing ``1 - threshold`` of ``|P psi|^2``.

        Capped at ``M/2`` and at the number of grid nodes strictly inside the
        region (more sine modes than that cannot be orthonormal on the grid).
        """
        x = psi.grid.nodes
        interior = int(np.count_nonzero((x > region.a) & (x < region.b)))
        cap = max(1, min(psi.grid.points // 2, interior))
        full = cls(region, psi.grid, params, cap)
        target = project(psi, region).norm2()
        if target == 0:
            return cls(region, psi.grid, params, 1)
        captured = np.cumsum(np.abs(full.coefficients(psi)) ** 2)
        ok = np.nonzero(captured >= (1 - threshold) * target)[0]
        return cls(region, psi.grid, params, int(ok[0]) + 1 if ok.size else cap)


def dirichlet_evolve(psi: WaveFunction, basis: DirichletBasis, t: float) -> WaveFunction:
    """``exp(-i t H_region / hbar) P psi`` through the sine eigenbasis."""
    if psi.grid != basis.grid:
        raise ValueError("state and basis live on different grids")
    target = project(psi, basis.region).norm2()
    c = basis.coefficients(psi)
    captured = float(np.sum(np.abs(c) ** 2))
    if captured < (1 - CAPTURE_THRESHOLD) * target:
        raise CaptureError(f"basis of {basis.modes} modes captures {captured:.12g} "
                           f"of {target:.12g}")
    c = c * np.exp(-1j * basis.energies * t / basis.params.hbar)
    return basis.synthesize(c)
