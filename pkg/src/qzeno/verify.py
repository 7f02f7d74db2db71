"""Invariant suite behind the ``verify`` subcommand.

Each check returns a :class:`Check` with the measured value and its
tolerance.  Checks on the experiment grid use the configured physics; the
operator-level oracles run on small fixed grids.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    DirichletBasis,
    dirichlet_evolve,
    free_propagate,
    heisenberg_symbol,
    propagator_matrix,
)
from .phase_space import (
    PhaseSpaceGrid,
    PhysicalParams,
    SpatialGrid,
    Symbol,
    WaveFunction,
    from_momentum,
    make_grid,
    to_momentum,
)
from .quantization import (
    symbol_of_operator,
    twisted_convolution_exact,
    weyl_quantize,
    wigner_transform,
)
from .semiclassical import theta_hierarchy, vanishing_verdict
from .symbols import Region, build_mollifier, escape_time
from .zeno import gaussian_state, regularized_product_state

__all__ = ["Check", "run_checks"]


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.3e} (tol {self.tol:.0e}, {self.seconds:.2f}s)"


def _random_states(grid: SpatialGrid, rng: np.random.Generator, n: int, region: Region,
                   params: PhysicalParams) -> list[WaveFunction]:
    """Random superpositions of Gaussian packets near the region."""
    out = []
    for _ in range(n):
        vals = np.zeros(grid.points, dtype=complex)
        for _ in range(3):
            c = rng.uniform(region.a, region.b)
            w = rng.uniform(0.08, 0.2)
            p = rng.uniform(-1.0, 1.0)
            amp = rng.normal() + 1j * rng.normal()
            vals += amp * gaussian_state(grid, c, w, p, params).values
        out.append(WaveFunction(grid, vals).normalize())
    return out


def _fourier_roundtrip(grid, states, **_):
    return max(float(np.max(np.abs(from_momentum(to_momentum(s)).values - s.values)))
               for s in states)


def _parseval(grid, states, **_):
    return max(abs(to_momentum(s).norm2() - s.norm2()) / s.norm2() for s in states)


def _unitarity(grid, states, params, **_):
    return max(abs(free_propagate(s, 0.3, params).norm() - s.norm()) for s in states)


def _group_law(grid, states, params, **_):
    err = 0.0
    for s in states:
        a = free_propagate(free_propagate(s, 0.1, params), 0.2, params)
        b = free_propagate(s, 0.3, params)
        err = max(err, (a - b).norm())
    return err


def _wigner_identities(params, region, **_):
    g = make_grid(4.0, 256)
    psi = gaussian_state(g, 0.5 * (region.a + region.b), 0.2, 0.5, params)
    w = wigner_transform(psi, params)
    dxi = w.grid.xi_axis.dx
    total = abs(float(np.sum(w.values.real)) * w.grid.cell_area - psi.norm2())
    marginal = float(np.max(np.abs(np.sum(w.values.real, axis=1) * dxi
                                   - np.abs(psi.values) ** 2)))
    return max(total, marginal)


def _dirichlet_norm(grid, params, region, rng, **_):
    """Random combinations of low sine modes keep their norm under confined evolution."""
    basis = DirichletBasis(region, grid, params, 16)
    err = 0.0
    for _ in range(5):
        c = rng.normal(size=16) + 1j * rng.normal(size=16)
        psi = basis.synthesize(c / np.linalg.norm(c))
        out = dirichlet_evolve(psi, basis, 0.3)
        err = max(err, abs(out.norm2() - psi.norm2()))
    return err


def _regularization_identity(grid, states, params, region, **_):
    worst = 0.0
    for N in (2, 4, 16):
        moll = build_mollifier(region, N, grid=grid)
        worst = max(worst, *(regularized_product_state(s, N, 0.3, moll, params)[1]
                             for s in states[:3]))
    return worst


def _gaussian_symbol(grid, x0, p0, sx, sp):
    return Symbol.from_function(
        grid, lambda x, xi: np.exp(-((x - x0) ** 2) / (2 * sx**2) - ((xi - p0) ** 2) / (2 * sp**2)))


def _homomorphism(**_):
    params = PhysicalParams(hbar=0.1)
    grid = PhaseSpaceGrid.dual(make_grid(np.pi, 64), params)
    f = _gaussian_symbol(grid, 0.3, -0.2, 0.6, 0.7)
    g = _gaussian_symbol(grid, -0.2, 0.3, 0.7, 0.6)
    lhs = weyl_quantize(twisted_convolution_exact(f, g, params), params)
    rhs = weyl_quantize(f, params) @ weyl_quantize(g, params)
    return float(np.max(np.abs(lhs.entries - rhs.entries)))


def _egorov(**_):
    params = PhysicalParams(hbar=0.2)
    grid = PhaseSpaceGrid.dual(make_grid(2 * np.pi, 64), params)
    tau = _gaussian_symbol(grid, 0.3, 0.2, 0.5, 0.45)
    err = 0.0
    for t in (0.2, 0.5):
        U = propagator_matrix(grid.x_axis, t, params)
        oracle = symbol_of_operator(U.adjoint() @ weyl_quantize(tau, params) @ U, params)
        err = max(err, float(np.max(np.abs(oracle.values - heisenberg_symbol(tau, t, params).symbol.values))))
    return err


def _support_vanishing(grid, params, region, xi_list, **_):
    """Largest sup-norm of any coefficient past the dilated escape time."""
    worst = 0.0
    for N in (16, 64):
        moll = build_mollifier(region, N, grid=grid)
        for xi in xi_list:
            if xi == 0:
                continue
            t = 1.05 * escape_time(region, params, xi, moll.eps).T_xi_N
            h = theta_hierarchy(N, t, [xi], 2, moll, params, grid)
            vanishing_verdict(h)
            worst = max(worst, float(h.sup_norms.max()))
    return worst


def _reversed_conjugate(grid, params, region, **_):
    """Reversed product equals the conjugate, order by order (relative to each order's scale)."""
    moll = build_mollifier(region, 4, grid=grid)
    xi = [-1.0, 0.3, 1.0]
    a = theta_hierarchy(4, 0.6, xi, 3, moll, params, grid)
    b = theta_hierarchy(4, 0.6, xi, 3, moll, params, grid, reverse=True)
    diff = np.max(np.abs(a.coeffs - b.coeffs.conj()), axis=(1, 2))
    scale = np.maximum(1.0, np.max(np.abs(a.coeffs), axis=(1, 2)))
    return float(np.max(diff / scale))


CHECKS = [
    ("fourier_roundtrip", _fourier_roundtrip, 1e-12),
    ("parseval", _parseval, 1e-12),
    ("propagator_unitarity", _unitarity, 1e-12),
    ("propagator_group_law", _group_law, 1e-12),
    ("wigner_normalization_marginals", _wigner_identities, 1e-8),
    ("dirichlet_norm_conservation", _dirichlet_norm, 1e-8),
    ("regularization_identity", _regularization_identity, 1e-10),
    ("weyl_homomorphism", _homomorphism, 1e-5),
    ("egorov_exactness", _egorov, 1e-5),
    ("support_vanishing", _support_vanishing, 1e-13),
    ("reversed_product_conjugate", _reversed_conjugate, 1e-10),
]


def run_checks(grid: SpatialGrid, params: PhysicalParams, region: Region,
               xi_list=(1.0,), seed: int = 0, n_states: int = 5) -> list[Check]:
    rng = np.random.default_rng(seed)
    states = _random_states(grid, rng, n_states, region, params)
    ctx = dict(grid=grid, params=params, region=region, states=states,
               xi_list=list(xi_list), rng=rng)
    out = []
    for name, fn, tol in CHECKS:
        start = time.perf_counter()
        try:
            value = float(fn(**ctx))
        except Exception:  # a guard tripping counts as a failed property
            value = float("inf")
        out.append(Check(name, value, tol, time.perf_counter() - start))
    return out
