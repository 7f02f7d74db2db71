"""Measurement region, its smooth cutoff, and classical escape times."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .phase_space import PhaseSpaceGrid, PhysicalParams, SpatialGrid, Symbol

__all__ = [
    "Region",
    "MollifiedIndicator",
    "EscapeTimes",
    "InfiniteEscapeTime",
    "smooth_step",
    "build_mollifier",
    "symbol_from_mollifier",
    "shifted_symbol",
    "shift_coefficient",
    "escape_time",
    "EPS_FLOOR_CELLS",
    "MAX_PROFILE_DERIVATIVE",
]

# Default transition width is never below this many grid cells.
EPS_FLOOR_CELLS = 8
MAX_PROFILE_DERIVATIVE = 6


class InfiniteEscapeTime(ValueError):
    """A particle with zero momentum never leaves the region."""


@dataclass(frozen=True)
class Region:
    """The closed interval ``[a, b]``."""

    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a < self.b):
            raise ValueError(f"need a < b, got [{self.a}, {self.b}]")

    @property
    def diameter(self) -> float:
        return self.b - self.a

    def dilation(self, eps: float) -> "Region":
        if eps < 0:
            raise ValueError("dilation radius must be nonnegative")
        return Region(self.a - eps, self.b + eps)

    def indicator(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return ((x >= self.a) & (x <= self.b)).astype(float)


def _sigma_derivs(z: np.ndarray, n: int) -> list[np.ndarray]:
    """``[s, s', ..., s^(n)]`` of the logistic function ``s = expit(z)``."""
    s = expit(z)
    q = s * expit(-z)  # s(1-s), computed without cancellation
    out = [s, q]
    if n >= 2:
        out.append(q * (1 - 2 * s))
    if n >= 3:
        out.append(q * (1 - 6 * s + 6 * s * s))
    if n >= 4:
        out.append(q * (1 - 2 * s) * (1 - 12 * s + 12 * s * s))
    if n >= 5:
        out.append(q * (1 - 30 * s + 150 * s**2 - 240 * s**3 + 120 * s**4))
    if n >= 6:
        out.append(q * (1 - 2 * s) * (1 - 60 * s + 420 * s**2 - 720 * s**3 + 360 * s**4))
    return out[: n + 1]


# Faa di Bruno: d^n/du^n f(z(u)) = sum over partitions; entries are
# (coefficient, order of f, tuple of z-derivative orders).
_FAA_DI_BRUNO = {
    1: [(1, 1, (1,))],
    2: [(1, 2, (1, 1)), (1, 1, (2,))],
    3: [(1, 3, (1, 1, 1)), (3, 2, (1, 2)), (1, 1, (3,))],
    4: [(1, 4, (1, 1, 1, 1)), (6, 3, (1, 1, 2)), (3, 2, (2, 2)), (4, 2, (1, 3)),
        (1, 1, (4,))],
    5: [(1, 5, (1,) * 5), (10, 4, (1, 1, 1, 2)), (15, 3, (1, 2, 2)),
        (10, 3, (1, 1, 3)), (10, 2, (2, 3)), (5, 2, (1, 4)), (1, 1, (5,))],
    6: [(1, 6, (1,) * 6), (15, 5, (1, 1, 1, 1, 2)), (45, 4, (1, 1, 2, 2)),
        (20, 4, (1, 1, 1, 3)), (15, 3, (2, 2, 2)), (60, 3, (1, 2, 3)),
        (15, 3, (1, 1, 4)), (10, 2, (3, 3)), (15, 2, (2, 4)), (6, 2, (1, 5)),
        (1, 1, (6,))],
}


def smooth_step(u, order: int = 0) -> np.ndarray:
    """The C-infinity step ``g(u)/(g(u)+g(1-u))``, ``g(u) = exp(-1/u)``.

    Exactly 0 for ``u <= 0`` and exactly 1 for ``u >= 1``; every derivative
    vanishes outside ``(0, 1)``.  ``order`` selects the derivative (<= 6).
    """
    if not 0 <= order <= MAX_PROFILE_DERIVATIVE:
        raise ValueError(f"derivative order must be in 0..{MAX_PROFILE_DERIVATIVE}")
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    if order == 0:
        out[u >= 1] = 1.0
    inside = (u > 0) & (u < 1)
    if not np.any(inside):
        return out
    v = u[inside]
    w = 1.0 - v
    # s(u) = expit(z(u)),  z = 1/(1-u) - 1/u
    z = 1.0 / w - 1.0 / v
    if order == 0:
        out[inside] = expit(z)
        return out
    sd = _sigma_derivs(z, order)
    acc = np.zeros_like(v)
    with np.errstate(over="ignore", invalid="ignore"):
        zd = {p: math.factorial(p) * (w ** -(p + 1) + (-1) ** (p + 1) * v ** -(p + 1))
              for p in range(1, order + 1)}
        for coef, fo, parts in _FAA_DI_BRUNO[order]:
            term = coef * sd[fo]
            for p in parts:
                term = term * zd[p]
            acc += term
    # near the endpoints s(1-s) underflows to 0 while powers of 1/u blow up
    acc[~np.isfinite(acc)] = 0.0
    out[inside] = acc
    return out


@dataclass(frozen=True)
class MollifiedIndicator:
    """Smooth cutoff: 1 on ``[a, b]``, 0 outside ``(a - eps, b + eps)``."""

    region: Region
    eps: float

    def __post_init__(self):
        if not (self.eps > 0 and np.isfinite(self.eps)):
            raise ValueError(f"eps must be positive, got {self.eps}")

    @property
    def support(self) -> Region:
        return self.region.dilation(self.eps)

    def __call__(self, x, order: int = 0) -> np.ndarray:
        """Value (or ``order``-th x-derivative) at ``x``, evaluated in closed form."""
        x = np.asarray(x, dtype=float)
        a, b, e = self.region.a, self.region.b, self.eps
        left = x < a
        right = x > b
        out = np.zeros(x.shape)
        if order == 0:
            out[~left & ~right] = 1.0
        if np.any(left):
            out[left] = smooth_step((x[left] - (a - e)) / e, order) / e**order
        if np.any(right):
            out[right] = ((-1) ** order * smooth_step(((b + e) - x[right]) / e, order)
                          / e**order)
        return out


def build_mollifier(region: Region, N: int, eps_override: float | None = None,
                    grid: SpatialGrid | None = None) -> MollifiedIndicator:
    """Cutoff for ``N`` measurements.

    The nominal width ``1/N**3`` is floored at ``EPS_FLOOR_CELLS * dx`` of
    ``grid`` so the transition stays resolvable; ``eps_override`` bypasses
    both.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    if eps_override is not None:
        if not eps_override > 0:
            raise ValueError(f"eps_override must be positive, got {eps_override}")
        eps = float(eps_override)
    else:
        eps = 1.0 / float(N) ** 3
        if grid is not None:
            eps = max(eps, EPS_FLOOR_CELLS * grid.dx)
    if eps >= region.diameter / 2:
        warnings.warn(f"transition width {eps} is at least half the region diameter "
                      f"{region.diameter}", stacklevel=2)
    return MollifiedIndicator(region, eps)


def _require_cover(moll: MollifiedIndicator, grid: PhaseSpaceGrid):
    s = moll.support
    if not grid.x_axis.contains(s.a, s.b):
        raise ValueError(f"grid x-range [-{grid.x_axis.half_width}, "
                         f"{grid.x_axis.half_width}) does not contain "
                         f"the cutoff support [{s.a}, {s.b}]")


def symbol_from_mollifier(moll: MollifiedIndicator, grid: PhaseSpaceGrid) -> Symbol:
    """Momentum-independent symbol ``chi(x)``."""
    _require_cover(moll, grid)
    row = moll(grid.x_axis.nodes)
    return Symbol(grid, np.repeat(row[:, None], grid.xi_axis.points, axis=1))


def shift_coefficient(k: int, N: int, t: float, params: PhysicalParams) -> float:
    """Displacement per unit momentum of the k-th Heisenberg factor, ``k t/(N m)``."""
    return k * t / (N * params.mass)


def shifted_symbol(moll: MollifiedIndicator, k: int, N: int, t: float,
                   params: PhysicalParams, grid: PhaseSpaceGrid) -> Symbol:
    """``chi(x + k t xi / (N m))`` on the phase-space grid."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    if int(k) != k or not 0 <= k <= N:
        raise ValueError(f"k must lie in 0..N, got {k}")
    _require_cover(moll, grid)
    X, XI = grid.mesh()
    c = shift_coefficient(k, N, t, params)
    return Symbol(grid, moll(X + c * XI))


@dataclass(frozen=True)
class EscapeTimes:
    T_xi: float
    T_xi_N: float


def escape_time(region: Region, params: PhysicalParams, xi: float,
                eps: float = 0.0) -> EscapeTimes:
    """Time after which momentum ``xi`` has surely left ``region`` (and its eps-dilation)."""
    if xi == 0:
        raise InfiniteEscapeTime("infinite escape time: xi = 0")
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    m, p = params.mass, abs(xi)
    return EscapeTimes(m * region.diameter / p, m * (region.diameter + 2 * eps) / p)
