"""hbar-hierarchy of the symbol of the regularized Zeno product.

The symbol of ``P_N(t) P_N((N-1)t/N) ... P_N(0)`` is the ordered star
product ``theta_N # ... # theta_0`` of the transported cutoffs
``theta_k(x, xi) = chi(x + k t xi/(N m))``.  Expanding every star product
in hbar gives coefficients ``Theta_{j,N}``; this module computes them, their
sup-norms and supports, and checks that they vanish once the classical
particle has left the dilated region.

Derivatives are carried exactly.  Each factor is a function of
``x + c_k xi`` only, so all its mixed partials are closed-form derivatives
of the cutoff profile; the running product is represented by a truncated
Taylor jet (all partials up to the order still needed) and multiplied with
the Leibniz rule.  Nothing is interpolated, so a coefficient is exactly
zero wherever one of its factors is.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .phase_space import PhaseSpaceGrid, PhysicalParams, SpatialGrid, Symbol
from .quantization import CostGuardError, GradedSymbol, star_truncated
from .symbols import (
    EPS_FLOOR_CELLS,
    InfiniteEscapeTime,
    MollifiedIndicator,
    Region,
    build_mollifier,
    escape_time,
    shift_coefficient,
)

__all__ = [
    "RowGrid",
    "RowJet",
    "SymbolHierarchy",
    "Verdict",
    "SweepResult",
    "SupportInconsistency",
    "ResolutionGuardError",
    "theta_jet",
    "theta_zero",
    "theta_hierarchy",
    "hierarchy_symbols",
    "vanishing_verdict",
    "escape_sweep",
    "estimate_cost",
    "ZERO_FLOOR",
    "MAX_HIERARCHY_ORDER",
    "MAX_HIERARCHY_N",
    "DEFAULT_BUDGET",
]

ZERO_FLOOR = 1e-13
MAX_HIERARCHY_ORDER = 3
MAX_HIERARCHY_N = 512
DEFAULT_BUDGET = 1e10
COST_UNIT = 1.0


class SupportInconsistency(AssertionError):
    """A coefficient survived although the classical particle has escaped."""


class ResolutionGuardError(ValueError):
    """The cutoff transition is too narrow for the grid."""


@dataclass(frozen=True)
class RowGrid:
    """An x-axis together with a finite list of momentum rows."""

    x_axis: SpatialGrid
    xi: tuple

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.xi), self.x_axis.points)


class RowJet:
    """All partials ``d^a/dx^a d^b/dxi^b f`` with ``a + b <= order`` on a :class:`RowGrid`."""

    __slots__ = ("grid", "order", "derivs", "_zero")

    def __init__(self, grid: RowGrid, order: int, derivs: dict | None, zero: bool = False):
        self.grid = grid
        self.order = order
        self.derivs = derivs or {}
        self._zero = zero

    @classmethod
    def zeros(cls, grid: RowGrid, order: int) -> "RowJet":
        return cls(grid, order, None, zero=True)

    def zeros_like(self) -> "RowJet":
        return RowJet.zeros(self.grid, self.order)

    def is_zero(self) -> bool:
        return self._zero

    def __getitem__(self, ab: tuple[int, int]) -> np.ndarray:
        if self._zero:
            return np.zeros(self.grid.shape, dtype=complex)
        return self.derivs[ab]

    @property
    def value(self) -> np.ndarray:
        return self[(0, 0)]

    def derivative(self, nx: int, nxi: int) -> "RowJet":
        new = self.order - nx - nxi
        if new < 0:
            raise ValueError(f"jet of order {self.order} has no derivative ({nx}, {nxi})")
        if self._zero:
            return RowJet.zeros(self.grid, new)
        return RowJet(self.grid, new, {(a, b): self.derivs[(a + nx, b + nxi)]
                                       for a, b in _multi_indices(new)})

    def _combine(self, other, op) -> "RowJet":
        if isinstance(other, RowJet):
            if other.grid != self.grid:
                raise ValueError("jets live on different row grids")
            order = min(self.order, other.order)
            if other._zero:
                return self._truncate(order)
            if self._zero:
                return other._truncate(order) if op is np.add else (other * -1)._truncate(order)
            return RowJet(self.grid, order, {ab: op(self.derivs[ab], other.derivs[ab])
                                             for ab in _multi_indices(order)})
        return NotImplemented

    def _truncate(self, order: int) -> "RowJet":
        if self._zero:
            return RowJet.zeros(self.grid, order)
        return RowJet(self.grid, order, {ab: self.derivs[ab] for ab in _multi_indices(order)})

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        if isinstance(other, RowJet):
            return self._leibniz(other)
        if self._zero:
            return self
        return RowJet(self.grid, self.order, {ab: v * other for ab, v in self.derivs.items()})

    __rmul__ = __mul__

    def _leibniz(self, other: "RowJet") -> "RowJet":
        if other.grid != self.grid:
            raise ValueError("jets live on different row grids")
        order = min(self.order, other.order)
        if self._zero or other._zero:
            return RowJet.zeros(self.grid, order)
        out = {}
        for a, b in _multi_indices(order):
            acc = None
            for p in range(a + 1):
                for q in range(b + 1):
                    term = self.derivs[(p, q)] * other.derivs[(a - p, b - q)]
                    w = math.comb(a, p) * math.comb(b, q)
                    if w != 1:
                        term = term * w
                    acc = term if acc is None else acc + term
            out[(a, b)] = acc
        return RowJet(self.grid, order, out)


def _multi_indices(order: int):
    return [(a, n - a) for n in range(order + 1) for a in range(n, -1, -1)]


def theta_jet(moll: MollifiedIndicator, shift: float, grid: RowGrid, order: int) -> RowJet:
    """Jet of ``chi(x + shift * xi)``: ``d^a_x d^b_xi = shift^b chi^(a+b)``."""
    x = grid.x_axis.nodes[None, :]
    xi = np.asarray(grid.xi, dtype=float)[:, None]
    arg = x + shift * xi
    profile = [moll(arg, n).astype(complex) for n in range(order + 1)]
    derivs = {}
    for a, b in _multi_indices(order):
        derivs[(a, b)] = profile[a + b] if b == 0 else profile[a + b] * shift**b
    return RowJet(grid, order, derivs)


def _check_inputs(N: int, J: int, moll: MollifiedIndicator, x_axis: SpatialGrid):
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    if N > MAX_HIERARCHY_N:
        raise ValueError(f"N limited to {MAX_HIERARCHY_N}, got {N}")
    if int(J) != J or not 0 <= J <= MAX_HIERARCHY_ORDER:
        raise ValueError(f"J must be in 0..{MAX_HIERARCHY_ORDER}, got {J}")
    if moll.eps < EPS_FLOOR_CELLS * x_axis.dx * (1 - 1e-12):
        raise ResolutionGuardError(f"transition width {moll.eps:g} is below {EPS_FLOOR_CELLS} grid "
                         f"cells ({EPS_FLOOR_CELLS * x_axis.dx:g})")
    s = moll.support
    if not x_axis.contains(s.a, s.b):
        raise ValueError("x-axis does not contain the cutoff support")


def theta_zero(N: int, t: float, xi, moll: MollifiedIndicator, params: PhysicalParams,
               x_axis: SpatialGrid) -> np.ndarray:
    """Classical coefficient ``prod_k chi(x + k t xi/(N m))``, shape ``(len(xi), M)``."""
    _check_inputs(N, 0, moll, x_axis)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))[:, None]
    x = x_axis.nodes[None, :]
    out = np.ones((xi.shape[0], x.shape[1]))
    for k in range(N + 1):
        out = out * moll(x + shift_coefficient(k, N, t, params) * xi)
    return out


@dataclass(frozen=True, eq=False)
class SymbolHierarchy:
    N: int
    t: float
    xi: tuple
    J: int
    eps: float
    x_axis: SpatialGrid
    region: Region
    params: PhysicalParams
    coeffs: np.ndarray  # (J+1, len(xi), M)
    elapsed: float = field(default=0.0)

    @property
    def sup_norms(self) -> np.ndarray:
        """``sup_x |Theta_j(x, xi)|`` with shape ``(J+1, len(xi))``."""
        return np.max(np.abs(self.coeffs), axis=2)

    def support_extent(self, j: int, i: int):
        """Smallest ``[lo, hi]`` containing ``|Theta_j| > ZERO_FLOOR`` on row ``i``, or None."""
        live = np.nonzero(np.abs(self.coeffs[j, i]) > ZERO_FLOOR)[0]
        if live.size == 0:
            return None
        x = self.x_axis.nodes
        return (float(x[live[0]]), float(x[live[-1]]))

    def resummed(self, hbar: float) -> np.ndarray:
        return sum(hbar**j * self.coeffs[j] for j in range(self.J + 1))


def _accumulate(N: int, t: float, rows: RowGrid, J: int, moll: MollifiedIndicator,
                params: PhysicalParams, reverse: bool = False) -> GradedSymbol:
    ks = list(range(N + 1))
    if reverse:
        ks = ks[::-1]
    # G(k) = theta_k # G(k-1); factors enter from the left
    acc = GradedSymbol.leading(theta_jet(moll, shift_coefficient(ks[0], N, t, params), rows, J), J)
    for k in ks[1:]:
        factor = theta_jet(moll, shift_coefficient(k, N, t, params), rows, J)
        acc = star_truncated(factor, acc, J)
    return acc


def theta_hierarchy(N: int, t: float, xi, J: int, moll: MollifiedIndicator,
                    params: PhysicalParams, x_axis: SpatialGrid,
                    reverse: bool = False) -> SymbolHierarchy:
    """``Theta_{j,N}(x, xi; t)`` for ``j <= J`` on the x-axis at each momentum in ``xi``.

    ``reverse=True`` builds ``theta_0 # ... # theta_N`` instead (the symbol of
    the adjoint product, for consistency checks).
    """
    _check_inputs(N, J, moll, x_axis)
    xi = tuple(float(v) for v in np.atleast_1d(xi))
    rows = RowGrid(x_axis, xi)
    start = time.perf_counter()
    acc = _accumulate(N, t, rows, J, moll, params, reverse)
    coeffs = np.stack([acc[j].value for j in range(J + 1)])
    return SymbolHierarchy(N, float(t), xi, J, moll.eps, x_axis, moll.region, params,
                           coeffs, time.perf_counter() - start)


def hierarchy_symbols(N: int, t: float, J: int, moll: MollifiedIndicator,
                      params: PhysicalParams, grid: PhaseSpaceGrid) -> GradedSymbol:
    """The hierarchy on every row of a phase-space grid, as a graded 2D symbol."""
    h = theta_hierarchy(N, t, grid.xi_axis.nodes, J, moll, params, grid.x_axis)
    return GradedSymbol(tuple(Symbol(grid, h.coeffs[j].T) for j in range(J + 1)))


@dataclass(frozen=True)
class Verdict:
    j: int
    xi: float
    vanished: bool
    sup_norm: float
    support: tuple | None
    T_xi: float
    T_xi_N: float
    escaped: bool  # t > T_xi_N


def vanishing_verdict(h: SymbolHierarchy) -> list[Verdict]:
    """Per ``(j, xi)``: did ``Theta_j`` vanish (sup <= ZERO_FLOOR)?

    Raises :class:`SupportInconsistency` if the classical particle has
    escaped (``t > T_xi_N``) while some coefficient survives.
    """
    sups = h.sup_norms
    out = []
    for i, xi in enumerate(h.xi):
        try:
            times = escape_time(h.region, h.params, xi, h.eps)
            T, TN = times.T_xi, times.T_xi_N
        except InfiniteEscapeTime:
            T = TN = float("inf")
        escaped = h.t > TN
        for j in range(h.J + 1):
            vanished = bool(sups[j, i] <= ZERO_FLOOR)
            if escaped and not vanished:
                raise SupportInconsistency(
                    f"Theta_{j} has sup {sups[j, i]:.3g} at xi={xi}, t={h.t} > T_xi_N={TN}")
            out.append(Verdict(j, xi, vanished, float(sups[j, i]), h.support_extent(j, i),
                               T, TN, escaped))
    return out


def estimate_cost(N_list: Sequence[int], n_t: int, n_xi: int, J: int, M_x: int) -> float:
    """Work units ``sum_runs M_x * n_xi * N * J^2``."""
    return float(sum(M_x * n_xi * N * max(J, 1) ** 2 * COST_UNIT for N in N_list) * n_t)


@dataclass(frozen=True, eq=False)
class SweepResult:
    rows: list  # dicts with the escape-sweep columns
    thresholds: dict  # (N, j, xi) -> detected t* or None
    eps: dict  # N -> eps used


def escape_sweep(N_list: Sequence[int], t_grid: Sequence[float], xi_list: Sequence[float],
                 J: int, region: Region, params: PhysicalParams, x_axis: SpatialGrid,
                 eps: float | None = None, budget: float = DEFAULT_BUDGET,
                 sink: list | None = None) -> SweepResult:
    """Hierarchy over ``N x t x xi``; detects the onset time of vanishing.

    ``t*`` for ``(N, j, xi)`` is the first grid time from which every later
    grid time has a vanished coefficient.  ``eps=None`` uses the default
    ``max(1/N^3, floor)`` width per ``N``.  Rows are appended to ``sink``
    as they are produced, so a caller keeps partial results if a guard trips.
    """
    t_grid = [float(t) for t in t_grid]
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ValueError("t_grid must be strictly increasing")
    cost = estimate_cost(N_list, len(t_grid), len(xi_list), J, x_axis.points)
    if cost > budget:
        raise CostGuardError(f"predicted work {cost:.3g} exceeds budget {budget:.3g}")
    rows = sink if sink is not None else []
    thresholds, eps_used = {}, {}
    for N in N_list:
        moll = build_mollifier(region, N, eps, grid=x_axis)
        eps_used[N] = moll.eps
        flags = {}
        for t in t_grid:
            h = theta_hierarchy(N, t, xi_list, J, moll, params, x_axis)
            for v in vanishing_verdict(h):
                lo, hi = v.support if v.support else (float("nan"), float("nan"))
                rows.append({"N": N, "j": v.j, "xi": v.xi, "t": t, "sup_norm": v.sup_norm,
                             "support_lo": lo, "support_hi": hi, "verdict": v.vanished,
                             "T_xi": v.T_xi, "T_xi_N": v.T_xi_N})
                flags.setdefault((v.j, v.xi), []).append(v.vanished)
        for (j, xi), seq in flags.items():
            onset = None
            for idx in range(len(seq) - 1, -1, -1):
                if not seq[idx]:
                    break
                onset = t_grid[idx]
            thresholds[(N, j, xi)] = onset
    return SweepResult(rows, thresholds, eps_used)
