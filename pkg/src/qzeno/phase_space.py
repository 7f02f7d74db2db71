"""Grids, wavefunctions and phase-space fields on a periodic box.

Everything here is 1D in position (and therefore 2D in phase space).  The
spatial box is ``[-L, L)`` with ``M`` equispaced nodes and periodic topology,
so the free propagator is a diagonal multiplier in momentum space.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "PhysicalParams",
    "SpatialGrid",
    "PhaseSpaceGrid",
    "WaveFunction",
    "Symbol",
    "make_grid",
    "to_momentum",
    "from_momentum",
    "inner_product",
    "spectral_derivative",
    "half_cell_shift",
    "GridMismatchError",
]

REAL_TOL = 1e-12


class GridMismatchError(ValueError):
    """Two fields living on different grids were combined."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PhysicalParams:
    hbar: float = 0.05
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and np.isfinite(self.hbar)):
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if not (self.mass > 0 and np.isfinite(self.mass)):
            raise ValueError(f"mass must be positive, got {self.mass}")


@dataclass(frozen=True)
class SpatialGrid:
    """Periodic grid ``x_i = -L + i*dx``, ``i = 0..M-1``, ``dx = 2L/M``.

    The same type is used for momentum axes of phase-space grids; only the
    units differ.
    """

    half_width: float
    points: int

    def __post_init__(self):
        if not (self.half_width > 0 and np.isfinite(self.half_width)):
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        m = int(self.points)
        if m != self.points or m < 2 or m & (m - 1):
            raise ValueError(f"points must be a power of two, got {self.points}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.points

    @cached_property
    def nodes(self) -> np.ndarray:
        return _frozen(-self.half_width + self.dx * np.arange(self.points))

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in ascending order, spanning ``[-pi/dx, pi/dx)``."""
        m = self.points
        return _frozen((np.arange(m) - m // 2) * (np.pi / self.half_width))

    @cached_property
    def fft_k(self) -> np.ndarray:
        """Wavenumbers in numpy FFT order."""
        return _frozen(2.0 * np.pi * np.fft.fftfreq(self.points, self.dx))

    @property
    def dk(self) -> float:
        return np.pi / self.half_width

    def contains(self, lo: float, hi: float) -> bool:
        return -self.half_width <= lo and hi < self.half_width

    def to_dict(self) -> dict:
        return {"half_width": self.half_width, "points": self.points}


def make_grid(L: float, M: int) -> SpatialGrid:
    """Validated constructor; ``M`` must be a power of two and at least 8."""
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    if int(M) != M or M < 8 or int(M) & (int(M) - 1):
        raise ValueError(f"M must be a power of two >= 8, got {M}")
    return SpatialGrid(float(L), int(M))


@dataclass(frozen=True)
class PhaseSpaceGrid:
    x_axis: SpatialGrid
    xi_axis: SpatialGrid

    @classmethod
    def dual(cls, x_axis: SpatialGrid, params: PhysicalParams) -> "PhaseSpaceGrid":
        """Momentum axis ``hbar * k`` conjugate to ``x_axis``: half-width ``pi*hbar/dx``."""
        xi = SpatialGrid(np.pi * params.hbar / x_axis.dx, x_axis.points)
        return cls(x_axis, xi)

    def is_dual(self, params: PhysicalParams, rtol: float = 1e-12) -> bool:
        want = np.pi * params.hbar / self.x_axis.dx
        return (self.xi_axis.points == self.x_axis.points
                and abs(self.xi_axis.half_width - want) <= rtol * want)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.x_axis.points, self.xi_axis.points)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_axis.nodes, self.xi_axis.nodes, indexing="ij")

    @property
    def cell_area(self) -> float:
        return self.x_axis.dx * self.xi_axis.dx


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Complex field on a spatial grid.

    ``space`` is ``"x"`` for position samples or ``"k"`` for momentum
    samples (ordered like ``grid.k``).  Norms use ``dx`` or ``dk``
    respectively.
    """

    grid: SpatialGrid
    values: np.ndarray
    space: str = "x"
    normalized: bool = field(default=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.grid.points,):
            raise ValueError(f"expected {self.grid.points} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("wavefunction has non-finite entries")
        if self.space not in ("x", "k"):
            raise ValueError(f"space must be 'x' or 'k', got {self.space!r}")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def measure(self) -> float:
        return self.grid.dx if self.space == "x" else self.grid.dk

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.measure)

    def norm(self) -> float:
        return float(np.sqrt(self.norm2()))

    def normalize(self) -> "WaveFunction":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero state")
        return WaveFunction(self.grid, self.values / n, self.space, normalized=True)

    def with_values(self, values: np.ndarray) -> "WaveFunction":
        return WaveFunction(self.grid, values, self.space)

    def __add__(self, other: "WaveFunction") -> "WaveFunction":
        _check_same(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "WaveFunction") -> "WaveFunction":
        _check_same(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c) -> "WaveFunction":
        return self.with_values(self.values * c)

    __rmul__ = __mul__


def _check_same(a: WaveFunction, b: WaveFunction):
    if a.grid != b.grid or a.space != b.space:
        raise GridMismatchError("wavefunctions live on different grids")


def to_momentum(psi: WaveFunction) -> WaveFunction:
    """Unitary discrete Fourier transform ``psi(x) -> psi_hat(k)``.

    Normalized as the continuous transform ``(2 pi)^(-1/2) int psi e^{-ikx} dx``
    so that ``sum |psi|^2 dx == sum |psi_hat|^2 dk``.
    """
    if psi.space != "x":
        raise ValueError("state is already in momentum space")
    g = psi.grid
    # x_0 = -L contributes the phase e^{ikL}
    coeff = np.fft.fftshift(np.fft.fft(psi.values))
    vals = coeff * np.exp(1j * g.k * g.half_width) * (g.dx / np.sqrt(2 * np.pi))
    return WaveFunction(g, vals, "k", psi.normalized)


def from_momentum(phi: WaveFunction) -> WaveFunction:
    if phi.space != "k":
        raise ValueError("state is not in momentum space")
    g = phi.grid
    coeff = phi.values * np.exp(-1j * g.k * g.half_width) * (np.sqrt(2 * np.pi) / g.dx)
    vals = np.fft.ifft(np.fft.ifftshift(coeff))
    return WaveFunction(g, vals, "x", phi.normalized)


def inner_product(psi: WaveFunction, phi: WaveFunction) -> complex:
    """``<psi, phi>``, conjugate-linear in ``psi``."""
    _check_same(psi, phi)
    return complex(np.vdot(psi.values, phi.values) * psi.measure)


def spectral_derivative(values: np.ndarray, axis_grid: SpatialGrid, order: int,
                        axis: int) -> np.ndarray:
    """``order``-th derivative along ``axis`` by Fourier multiplication.

    For odd orders the Nyquist mode is dropped (its derivative is not
    representable as a real field).
    """
    if order == 0:
        return values
    k = axis_grid.fft_k
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult = mult.copy()
        mult[axis_grid.points // 2] = 0.0
    shape = [1] * values.ndim
    shape[axis] = -1
    out = np.fft.ifft(np.fft.fft(values, axis=axis) * mult.reshape(shape), axis=axis)
    return out


def half_cell_shift(values: np.ndarray, axis_grid: SpatialGrid, sign: int = 1,
                    axis: int = 0) -> np.ndarray:
    """Trigonometric interpolation of ``values`` at ``x + sign*dx/2``."""
    k = axis_grid.fft_k
    mult = np.exp(0.5j * sign * k * axis_grid.dx)
    mult[axis_grid.points // 2] = 0.0
    shape = [1] * values.ndim
    shape[axis] = -1
    return np.fft.ifft(np.fft.fft(values, axis=axis) * mult.reshape(shape), axis=axis)


@dataclass(frozen=True, eq=False)
class Symbol:
    """Complex field sampled on a phase-space grid, shape ``(M_x, M_xi)``."""

    grid: PhaseSpaceGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("symbol has non-finite entries")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def from_function(cls, grid: PhaseSpaceGrid, fn) -> "Symbol":
        X, XI = grid.mesh()
        return cls(grid, np.broadcast_to(fn(X, XI), grid.shape))

    @classmethod
    def zeros(cls, grid: PhaseSpaceGrid) -> "Symbol":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    def zeros_like(self) -> "Symbol":
        return Symbol.zeros(self.grid)

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def is_real(self, tol: float = REAL_TOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.values), initial=0.0)))
        return float(np.max(np.abs(self.values.imag), initial=0.0)) <= tol * scale

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values), initial=0.0))

    def derivative(self, nx: int, nxi: int) -> "Symbol":
        """Mixed spectral derivative ``d^nx/dx^nx d^nxi/dxi^nxi``."""
        v = spectral_derivative(self.values, self.grid.x_axis, nx, axis=0)
        v = spectral_derivative(v, self.grid.xi_axis, nxi, axis=1)
        return Symbol(self.grid, v)

    def conj(self) -> "Symbol":
        return Symbol(self.grid, np.conj(self.values))

    def _other(self, other):
        if isinstance(other, Symbol):
            if other.grid != self.grid:
                raise GridMismatchError("symbols live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return Symbol(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Symbol(self.grid, self.values - self._other(other))

    def __mul__(self, other):
        return Symbol(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Symbol(self.grid, -self.values)
