"""Weyl correspondence on a periodic grid.

Dense-matrix quantization, its inverse, the Wigner transform, the exact
twisted (Moyal) product of band-limited symbols, and the graded
star-product expansion used in production.

Conventions: ``Op(tau)`` has kernel
``K(x, y) = (2 pi hbar)^-1 int tau((x+y)/2, xi) exp(i xi (x-y)/hbar) dxi``
and an :class:`OperatorMatrix` stores ``K(x_i, x_j) * dx`` so that it acts
on wavefunction samples by plain matrix-vector multiplication.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .phase_space import (
    GridMismatchError,
    PhaseSpaceGrid,
    PhysicalParams,
    SpatialGrid,
    Symbol,
    WaveFunction,
    half_cell_shift,
)

__all__ = [
    "OperatorMatrix",
    "GradedSymbol",
    "weyl_quantize",
    "symbol_of_operator",
    "wigner_transform",
    "twisted_convolution_exact",
    "sharp_j",
    "star_truncated",
    "moyal_bracket_truncated",
    "poisson_bracket",
    "CostGuardError",
    "ResolutionError",
    "MAX_QUANTIZE_POINTS",
    "MAX_TWISTED_POINTS",
    "MAX_SHARP_ORDER",
]

MAX_QUANTIZE_POINTS = 256
MAX_TWISTED_POINTS = 128 * 128
MAX_SHARP_ORDER = 4
TAIL_FRACTION = 0.1
TAIL_ENERGY_WARN = 0.01


class CostGuardError(RuntimeError):
    """Requested oracle computation exceeds its size budget."""


class ResolutionError(ValueError):
    """The momentum axis cannot represent the grid's momentum content."""


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    grid: SpatialGrid
    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=complex)
        m = self.grid.points
        if e.shape != (m, m):
            raise ValueError(f"expected ({m}, {m}) entries, got {e.shape}")
        if not np.all(np.isfinite(e)):
            raise ValueError("operator has non-finite entries")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def is_hermitian(self, tol: float = 1e-8) -> bool:
        return self.hermiticity_error() <= tol

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.grid, self.entries.conj().T)

    def apply(self, psi: WaveFunction) -> WaveFunction:
        if psi.grid != self.grid or psi.space != "x":
            raise GridMismatchError("operator and state live on different grids")
        return psi.with_values(self.entries @ psi.values)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if other.grid != self.grid:
            raise GridMismatchError("operators live on different grids")
        return OperatorMatrix(self.grid, self.entries @ other.entries)


def _check_xi_axis(grid: PhaseSpaceGrid, params: PhysicalParams):
    need = np.pi * params.hbar / grid.x_axis.dx
    if grid.xi_axis.half_width < need * (1 - 1e-12):
        raise ResolutionError(
            f"xi-axis half-width {grid.xi_axis.half_width:.6g} does not reach "
            f"pi*hbar/dx = {need:.6g}")


def _separations(m: int) -> np.ndarray:
    return np.arange(-(m // 2), m - m // 2)


def _kernel_layout(m: int):
    """Index maps between ``K[row, col]`` and ``a[mid, n]``.

    ``n`` is the (wrapped) separation ``row - col`` in cells; even ``n``
    have their midpoint on node ``mid``, odd ``n`` on ``mid + 1/2``.
    """
    n = _separations(m)
    j = np.arange(m)[:, None]
    half = np.floor_divide(n, 2)[None, :]
    odd = (n % 2 == 1)[None, :]
    rows = (j + half + odd) % m
    cols = (j - half) % m
    return n, rows, cols, odd[0]


def _ft_xi(values: np.ndarray, grid: PhaseSpaceGrid, params: PhysicalParams) -> np.ndarray:
    """``a[i, n] = dx dxi/(2 pi hbar) sum_l values[i, l] exp(i xi_l n dx / hbar)``."""
    m = grid.x_axis.points
    n = _separations(m)
    if grid.is_dual(params):
        # xi_l n dx / hbar = -pi n + 2 pi l n / m
        a = np.fft.ifft(values, axis=1)[:, n % m]
        return a * np.where(n % 2 == 0, 1.0, -1.0)[None, :]
    xi = grid.xi_axis.nodes
    phase = np.exp(1j * np.outer(xi, n * grid.x_axis.dx) / params.hbar)
    return (values @ phase) * (grid.cell_area / (2 * np.pi * params.hbar))


def weyl_quantize(tau: Symbol, params: PhysicalParams) -> OperatorMatrix:
    """Dense Weyl quantization of ``tau`` on its own x-axis.

    Symbol values at half-cell midpoints come from trigonometric
    interpolation in x.  Intended as an oracle: ``M <= 256``.
    """
    grid = tau.grid
    m = grid.x_axis.points
    if m > MAX_QUANTIZE_POINTS:
        raise CostGuardError(f"dense quantization limited to M <= {MAX_QUANTIZE_POINTS}, got {m}")
    _check_xi_axis(grid, params)
    a_node = _ft_xi(tau.values, grid, params)
    a_half = _ft_xi(half_cell_shift(tau.values, grid.x_axis, +1, axis=0), grid, params)
    n, rows, cols, odd = _kernel_layout(m)
    K = np.empty((m, m), dtype=complex)
    K[rows[:, ~odd], cols[:, ~odd]] = a_node[:, ~odd]
    K[rows[:, odd], cols[:, odd]] = a_half[:, odd]
    return OperatorMatrix(grid.x_axis, K)


def symbol_of_operator(op: OperatorMatrix, params: PhysicalParams,
                       grid: PhaseSpaceGrid | None = None) -> Symbol:
    """Inverse Weyl map ``tau(x, xi) = int K(x+s/2, x-s/2) exp(-i xi s/hbar) ds``.

    Defaults to the momentum axis dual to the operator's grid, where the map
    inverts :func:`weyl_quantize` exactly (up to the x-Nyquist mode).
    """
    if grid is None:
        grid = PhaseSpaceGrid.dual(op.grid, params)
    if grid.x_axis != op.grid:
        raise GridMismatchError("phase-space grid does not match the operator grid")
    _check_xi_axis(grid, params)
    m = op.grid.points
    n, rows, cols, odd = _kernel_layout(m)
    a = op.entries[rows, cols]
    a[:, odd] = half_cell_shift(a[:, odd], op.grid, -1, axis=0)
    if grid.is_dual(params):
        b = np.zeros_like(a)
        b[:, n % m] = a * np.where(n % 2 == 0, 1.0, -1.0)[None, :]
        return Symbol(grid, np.fft.fft(b, axis=1))
    xi = grid.xi_axis.nodes
    phase = np.exp(-1j * np.outer(n * op.grid.dx, xi) / params.hbar)
    return Symbol(grid, a @ phase)


def wigner_transform(psi: WaveFunction, params: PhysicalParams,
                     grid: PhaseSpaceGrid | None = None) -> Symbol:
    """Wigner function ``(2 pi hbar)^-1 int psi*(x+s/2) psi(x-s/2) e^{i xi s/hbar} ds``."""
    if psi.space != "x":
        raise ValueError("wigner_transform expects a position-space state")
    v = psi.values
    rho = OperatorMatrix(psi.grid, np.outer(v, v.conj()) * psi.grid.dx)
    w = symbol_of_operator(rho, params, grid)
    return Symbol(w.grid, w.values.real / (2 * np.pi * params.hbar))


def _plane_wave_coeffs(values: np.ndarray, grid: PhaseSpaceGrid) -> np.ndarray:
    """``c[a, b]`` with ``f(x, xi) = sum c[a, b] exp(i (kx_a x + ky_b xi))``, centered order."""
    mx, mp = grid.shape
    c = np.fft.fftshift(np.fft.fft2(values)) / (mx * mp)
    kx, ky = grid.x_axis.k, grid.xi_axis.k
    return (c * np.exp(1j * kx * grid.x_axis.half_width)[:, None]
            * np.exp(1j * ky * grid.xi_axis.half_width)[None, :])


def twisted_convolution_exact(f: Symbol, g: Symbol, params: PhysicalParams) -> Symbol:
    """Exact Moyal product of the band-limited interpolants of ``f`` and ``g``.

    Plane waves compose as
    ``e_z1 # e_z2 = exp(-i hbar/2 (k1 y2 - y1 k2)) e_{z1+z2}``, which is the
    twisted-convolution integral evaluated in closed form; summing over all
    pairs of grid frequencies gives the product with no truncation in hbar.
    The result is sampled back on the grid nodes.  Cost is ``O((Mx*Mxi)^2)``.
    """
    grid = f.grid
    if g.grid != grid:
        raise GridMismatchError("symbols live on different grids")
    mx, mp = grid.shape
    if mx * mp > MAX_TWISTED_POINTS:
        raise CostGuardError(f"exact twisted product limited to {MAX_TWISTED_POINTS} "
                             f"grid points, got {mx * mp}")
    hbar = params.hbar
    F = _plane_wave_coeffs(f.values, grid)
    G = _plane_wave_coeffs(g.values, grid)
    kx, ky = grid.x_axis.k, grid.xi_axis.k
    # twist(a, b) = exp(-i hbar/2 kx_a ky_b); the pair phase factorizes as
    # twist(a1, b2) * conj(twist(a2, b1))
    twist = np.exp(-0.5j * hbar * np.outer(kx, ky))
    H = np.zeros((2 * mx, 2 * mp), dtype=complex)
    for a1 in range(mx):
        left = G * twist[a1][None, :]
        for b1 in np.nonzero(F[a1])[0]:
            H[a1:a1 + mx, b1:b1 + mp] += F[a1, b1] * left * np.conj(twist[:, b1])[:, None]
    # output frequency index c <-> (c - M) * dk; fold onto the grid modes
    cx = (np.arange(2 * mx) - mx) * grid.x_axis.dk
    cy = (np.arange(2 * mp) - mp) * grid.xi_axis.dk
    H *= (np.exp(-1j * cx * grid.x_axis.half_width)[:, None]
          * np.exp(-1j * cy * grid.xi_axis.half_width)[None, :])
    folded = H.reshape(2, mx, 2, mp).sum(axis=(0, 2))
    return Symbol(grid, np.fft.ifft2(folded) * (mx * mp))


def _tail_fraction(values: np.ndarray) -> float:
    power = np.abs(np.fft.fftshift(np.fft.fft2(values))) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    mask = np.zeros(power.shape, dtype=bool)
    for ax, n in enumerate(power.shape):
        idx = np.abs(np.arange(n) - n // 2) >= (1 - TAIL_FRACTION) * (n // 2)
        shape = [1, 1]
        shape[ax] = n
        mask |= idx.reshape(shape)
    return float(power[mask].sum() / total)


def _check_smooth(*fields):
    for fld in fields:
        if isinstance(fld, Symbol):
            frac = _tail_fraction(fld.values)
            if frac > TAIL_ENERGY_WARN:
                warnings.warn(f"symbol is under-resolved: {frac:.3g} of its spectral energy "
                              f"sits in the top {TAIL_FRACTION:.0%} of modes", stacklevel=3)


def sharp_j(f, g, j: int):
    """``f #_j g = (Dx_f . Dxi_g - Dx_g . Dxi_f)^j (f g)``.

    Expanded binomially as
    ``sum_r C(j, r) (-1)^(j-r) (dx^r dxi^(j-r) f) (dxi^r dx^(j-r) g)``.
    Works for any field type exposing ``derivative(nx, nxi)`` and ``*``
    (spectral :class:`Symbol` or exact jets).
    """
    if int(j) != j or j < 0:
        raise ValueError(f"order must be a nonnegative integer, got {j}")
    if j > MAX_SHARP_ORDER:
        raise ValueError(f"sharp_j limited to j <= {MAX_SHARP_ORDER}, got {j}")
    _check_smooth(f, g)
    total = None
    for r in range(j + 1):
        term = (f.derivative(r, j - r) * g.derivative(j - r, r)) * (
            math.comb(j, r) * (-1) ** (j - r))
        total = term if total is None else total + term
    return total


def poisson_bracket(f, g):
    """``{f, g} = df/dx dg/dxi - df/dxi dg/dx``."""
    return f.derivative(1, 0) * g.derivative(0, 1) - f.derivative(0, 1) * g.derivative(1, 0)


def _is_zero(field) -> bool:
    return getattr(field, "is_zero", lambda: False)()


@dataclass(frozen=True, eq=False)
class GradedSymbol:
    """Truncated series ``sum_j hbar^j coeffs[j]``; coefficients are hbar-free."""

    coeffs: tuple

    def __post_init__(self):
        cs = tuple(self.coeffs)
        if not cs:
            raise ValueError("a graded symbol needs at least one coefficient")
        g0 = cs[0].grid
        if any(c.grid != g0 for c in cs):
            raise GridMismatchError("graded coefficients must share one grid")
        object.__setattr__(self, "coeffs", cs)

    @classmethod
    def leading(cls, field, J: int) -> "GradedSymbol":
        return cls((field,) + tuple(field.zeros_like() for _ in range(J)))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def grid(self):
        return self.coeffs[0].grid

    def __getitem__(self, j):
        return self.coeffs[j]

    def evaluate(self, hbar: float):
        """The truncated sum at a numerical ``hbar``."""
        total = self.coeffs[0]
        for j, c in enumerate(self.coeffs[1:], start=1):
            total = total + c * hbar**j
        return total

    def __sub__(self, other: "GradedSymbol") -> "GradedSymbol":
        return GradedSymbol(tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))


def _as_graded(f, J: int) -> GradedSymbol:
    return f if isinstance(f, GradedSymbol) else GradedSymbol.leading(f, J)


def star_truncated(f, g, J: int) -> GradedSymbol:
    """Graded star product truncated at order ``J``.

    ``c_i = sum_{l+p+q=i} (i/2)^l / l! * (f_p #_l g_q)``.
    """
    if int(J) != J or J < 0:
        raise ValueError(f"J must be a nonnegative integer, got {J}")
    if J > MAX_SHARP_ORDER:
        raise ValueError(f"truncation order limited to {MAX_SHARP_ORDER}, got {J}")
    f, g = _as_graded(f, J), _as_graded(g, J)
    if f.grid != g.grid:
        raise GridMismatchError("graded symbols live on different grids")
    if f.order < J or g.order < J:
        raise ValueError("inputs carry fewer than J+1 coefficients")
    out = []
    for i in range(J + 1):
        acc = None
        for p in range(i + 1):
            if _is_zero(f[p]):
                continue
            for q in range(i - p + 1):
                if _is_zero(g[q]):
                    continue
                l = i - p - q
                term = sharp_j(f[p], g[q], l) * ((0.5j) ** l / math.factorial(l))
                acc = term if acc is None else acc + term
        out.append(acc if acc is not None else f[0].zeros_like())
    return GradedSymbol(tuple(out))


def moyal_bracket_truncated(f, g, J: int) -> GradedSymbol:
    """``f # g - g # f`` through order ``J``."""
    return star_truncated(f, g, J) - star_truncated(g, f, J)
