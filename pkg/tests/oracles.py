"""Independent reference computations used as test oracles.

Nothing here calls the package's Weyl calculus or hierarchy code; closed
forms are derived by hand and symbolic pieces are done in sympy.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np
import sympy as sp


def gaussian_fourier(k, center, width):
    """Continuous transform of the normalized packet exp(-(x-c)^2/(4w^2))."""
    norm = (2 * np.pi * width**2) ** -0.25
    return norm * np.sqrt(2) * width * np.exp(-(width**2) * k**2 - 1j * k * center)


def free_gaussian(x, t, center, width, momentum, hbar, mass):
    """Free evolution of the normalized packet with initial spread ``width`` and momentum ``p``."""
    a = width**2 + 1j * hbar * t / (2 * mass)
    k0 = momentum / hbar
    pref = (2 * np.pi * width**2) ** -0.25 * width / np.sqrt(a)
    xc = x - center - momentum * t / mass
    phase = np.exp(1j * k0 * (x - center) - 1j * hbar * k0**2 * t / (2 * mass))
    return pref * np.exp(-(xc**2) / (4 * a)) * phase * np.exp(1j * k0 * center)


def gaussian_wigner(x, xi, center, width, momentum, hbar):
    """Wigner function of the normalized packet of position spread ``width``."""
    sp_ = hbar / (2 * width)
    return (np.exp(-((x - center) ** 2) / (2 * width**2) - ((xi - momentum) ** 2) / (2 * sp_**2))
            / (np.pi * hbar))


def radial_gaussian_star(x, xi, a, b, hbar):
    """exp(-a r^2) # exp(-b r^2) for r^2 = x^2 + xi^2 (closed form)."""
    d = 1 + a * b * hbar**2
    return np.exp(-(a + b) / d * (x**2 + xi**2)) / d


# -- smooth step, symbolically

_u = sp.Symbol("u", positive=True)
_STEP = sp.exp(-1 / _u) / (sp.exp(-1 / _u) + sp.exp(-1 / (1 - _u)))


@lru_cache(maxsize=None)
def smooth_step_derivative(order: int):
    return sp.lambdify(_u, sp.diff(_STEP, _u, order), "mpmath")


# -- brute-force hierarchy by enumerating compositions

X, XI = sp.symbols("x xi", real=True)


def _chi_functions(max_order: int):
    classes = [type(f"chi{n}", (sp.Function,), {"nargs": 1}) for n in range(max_order + 1)]
    for n in range(max_order):
        nxt = classes[n + 1]
        classes[n].fdiff = (lambda c: (lambda self, argindex=1: c(self.args[0])))(nxt)
    return classes


def _sharp(f, g, j):
    total = 0
    for r in range(j + 1):
        df = sp.diff(f, X, r, XI, j - r) if j else f
        dg = sp.diff(g, XI, r, X, j - r) if j else g
        total += math.comb(j, r) * (-1) ** (j - r) * df * dg
    return total


def brute_force_hierarchy(N: int, shifts, J: int, moll, x_nodes, xi_values):
    """Theta_j for j <= J from the nested sum over compositions j_1 + ... + j_N = j.

    Each composition contributes prod_k (i/2)^{j_k}/j_k! times
    theta_N #_{j_N} ( ... (theta_1 #_{j_1} theta_0)).
    """
    chi = _chi_functions(2 * J + 2)
    theta = [chi[0](X + c * XI) for c in shifts]
    modules = [{f"chi{n}": (lambda n: (lambda v: moll(np.asarray(v, dtype=float), n)))(n)
                for n in range(len(chi))}, "numpy"]
    out = np.zeros((J + 1, len(xi_values), len(x_nodes)), dtype=complex)
    xg, pg = np.meshgrid(x_nodes, xi_values)
    for js in itertools.product(range(J + 1), repeat=N):
        j = sum(js)
        if j > J:
            continue
        expr = theta[0]
        for k in range(1, N + 1):
            expr = _sharp(theta[k], expr, js[k - 1])
        weight = sp.Integer(1)
        for jk in js:
            weight *= (sp.I / 2) ** jk / sp.factorial(jk)
        fn = sp.lambdify((X, XI), sp.expand(weight * expr), modules)
        out[j] += np.broadcast_to(fn(xg, pg), xg.shape)
    return out


# -- operator-product oracle

def _propagate_columns(A, grid, s, hbar, mass):
    phase = np.exp(-1j * hbar * grid.fft_k**2 * s / (2 * mass))
    return np.fft.ifft(np.fft.fft(A, axis=0) * phase[:, None], axis=0)


def regularized_product_matrix(N, t, cutoff, grid, hbar, mass=1.0, band=0.5, power=16):
    """Dense ``U(-t) (chi U(t/N))^N chi``, filtered to momenta well inside the grid band.

    The smooth filter ``exp(-(hbar k / xi_c)^power)`` with ``xi_c = band * pi hbar/dx``
    removes wrap-around couplings between the extreme grid momenta, which
    otherwise pollute the discrete Weyl symbol.  It equals one to machine
    precision on momenta small compared with ``xi_c``.
    """
    chi = cutoff(grid.nodes)
    A = np.diag(chi).astype(complex)
    for _ in range(N):
        A = chi[:, None] * _propagate_columns(A, grid, t / N, hbar, mass)
    A = _propagate_columns(A, grid, -t, hbar, mass)
    xi_c = band * np.pi * hbar / grid.dx
    f = np.exp(-((hbar * grid.fft_k / xi_c) ** power))
    A = np.fft.ifft(np.fft.fft(A, axis=0) * f[:, None], axis=0)
    return np.fft.fft(np.fft.ifft(A, axis=1) * f[None, :], axis=1)
