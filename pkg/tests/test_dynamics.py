import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import gaussian_symbol
from oracles import free_gaussian
from qzeno.dynamics import (
    BoundaryMassError,
    CaptureError,
    DirichletBasis,
    FlowExitError,
    FlowMap,
    boundary_mass,
    classical_flow,
    dirichlet_evolve,
    free_propagate,
    heisenberg_symbol,
    project,
    propagator_matrix,
)
from qzeno.phase_space import PhaseSpaceGrid, PhysicalParams, Symbol, WaveFunction, make_grid
from qzeno.quantization import symbol_of_operator, weyl_quantize
from qzeno.symbols import MollifiedIndicator, Region
from qzeno.zeno import gaussian_state


class TestFreePropagation:
    def test_gaussian_closed_form(self, ref_grid, ref_params):
        psi = gaussian_state(ref_grid, 0.5, 0.08, 0.3, ref_params)
        for t in (0.3, 1.0):
            out = free_propagate(psi, t, ref_params)
            ref = free_gaussian(ref_grid.nodes, t, 0.5, 0.08, 0.3, ref_params.hbar, ref_params.mass)
            assert np.max(np.abs(out.values - ref)) < 1e-10

    def test_unitarity_and_group_law(self, ref_grid, ref_params):
        psi = gaussian_state(ref_grid, 0.4, 0.1, -0.2, ref_params)
        a = free_propagate(free_propagate(psi, 0.2, ref_params), 0.5, ref_params)
        b = free_propagate(psi, 0.7, ref_params)
        assert abs(b.norm() - 1.0) < 1e-12
        assert (a - b).norm() < 1e-12
        assert (free_propagate(b, -0.7, ref_params) - psi).norm() < 1e-12

    def test_matrix_matches_fft(self):
        p = PhysicalParams(0.1)
        g = make_grid(4.0, 64)
        psi = gaussian_state(g, 0.0, 0.4, 0.0, p)
        U = propagator_matrix(g, 0.3, p)
        assert np.max(np.abs(U.apply(psi).values - free_propagate(psi, 0.3, p).values)) < 1e-12
        assert np.max(np.abs((U.adjoint() @ U).entries - np.eye(64))) < 1e-12

    def test_boundary_guard(self, ref_params):
        g = make_grid(2.0, 256)
        psi = gaussian_state(g, 1.5, 0.3, 0.0, ref_params)
        assert boundary_mass(psi) > 1e-8
        with pytest.raises(BoundaryMassError):
            free_propagate(psi, 0.1, ref_params)
        free_propagate(psi, 0.1, ref_params, check_boundary=False)

    def test_rejects_momentum_space(self, ref_params):
        g = make_grid(1.0, 16)
        with pytest.raises(ValueError):
            free_propagate(WaveFunction(g, np.ones(16), "k"), 0.1, ref_params)


class TestClassicalFlow:
    @settings(max_examples=30, deadline=None)
    @given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-1, 1), st.floats(-1, 1))
    def test_group_property(self, x, xi, s, t):
        p = PhysicalParams(0.05, 2.0)
        f = FlowMap(p, s).then(FlowMap(p, t))
        assert np.allclose(f(x, xi), classical_flow(*classical_flow(x, xi, s, p), t, p))
        assert np.allclose(f.inverse()(*f(x, xi)), (x, xi))
        assert FlowMap.jacobian_determinant() == 1.0


class TestHeisenbergSymbol:
    def test_egorov_against_conjugation(self):
        p = PhysicalParams(0.2)
        g = PhaseSpaceGrid.dual(make_grid(2 * np.pi, 64), p)
        tau = gaussian_symbol(g, 0.3, 0.2, 0.5, 0.45)
        for t in (0.2, 0.5):
            U = propagator_matrix(g.x_axis, t, p)
            oracle = symbol_of_operator(U.adjoint() @ weyl_quantize(tau, p) @ U, p)
            got = heisenberg_symbol(tau, t, p)
            assert got.interpolated
            assert np.max(np.abs(oracle.values - got.symbol.values)) < 1e-5

    def test_mollifier_closed_form(self):
        p = PhysicalParams(0.05)
        g = PhaseSpaceGrid.dual(make_grid(4.0, 128), p)
        m = MollifiedIndicator(Region(0, 1), 0.2)
        got = heisenberg_symbol(m, 0.7, p, g)
        X, XI = g.mesh()
        assert not got.interpolated
        assert np.array_equal(got.symbol.values, m(X + 0.7 * XI))

    def test_flow_exit(self):
        p = PhysicalParams(1.0)
        g = PhaseSpaceGrid.dual(make_grid(np.pi, 64), p)
        tau = Symbol.from_function(g, lambda x, xi: np.exp(-((x - 2.5) ** 2) / 0.05) + 0 * xi)
        with pytest.raises(FlowExitError):
            heisenberg_symbol(tau, 0.5, p)


class TestDirichlet:
    def test_basis_energies_and_orthonormality(self, ref_grid, ref_params):
        b = DirichletBasis(Region(0, 1), ref_grid, ref_params, 8)
        assert b.gram_error < 1e-12
        assert np.allclose(b.energies, ref_params.hbar**2 * np.pi**2 * np.arange(1, 9) ** 2 / 2)

    def test_single_mode_phase(self, ref_grid, ref_params):
        b = DirichletBasis(Region(0, 1), ref_grid, ref_params, 4)
        psi = WaveFunction(ref_grid, b.functions[2])
        out = dirichlet_evolve(psi, b, 1.3)
        assert np.allclose(out.values, psi.values * np.exp(-1j * b.energies[2] * 1.3 / ref_params.hbar))

    def test_norm_conservation(self, ref_grid, ref_params, rng):
        b = DirichletBasis(Region(0, 1), ref_grid, ref_params, 16)
        c = rng.normal(size=16) + 1j * rng.normal(size=16)
        psi = b.synthesize(c / np.linalg.norm(c))
        assert abs(dirichlet_evolve(psi, b, 0.7).norm2() - psi.norm2()) < 1e-8

    def test_for_state_captures(self, ref_grid, ref_params):
        psi = gaussian_state(ref_grid, 0.5, 0.08, 0.0, ref_params)
        b = DirichletBasis.for_state(psi, Region(0, 1), ref_params)
        c = b.coefficients(psi)
        assert np.sum(np.abs(c) ** 2) >= (1 - 1e-8) * project(psi, Region(0, 1)).norm2()

    def test_capture_error(self, ref_grid, ref_params):
        psi = gaussian_state(ref_grid, 0.5, 0.08, 0.0, ref_params)
        with pytest.raises(CaptureError):
            dirichlet_evolve(psi, DirichletBasis(Region(0, 1), ref_grid, ref_params, 2), 0.1)

    def test_too_many_modes(self, ref_params):
        g = make_grid(2.0, 32)
        with pytest.raises(ValueError):
            DirichletBasis(Region(0, 1), g, ref_params, 16)


class TestProject:
    def test_sharp_and_smooth(self, ref_grid):
        psi = WaveFunction(ref_grid, np.ones(ref_grid.points))
        r = Region(0, 1)
        assert np.array_equal(project(psi, r).values, r.indicator(ref_grid.nodes))
        m = MollifiedIndicator(r, 0.1)
        assert np.array_equal(project(psi, m).values, m(ref_grid.nodes))
        with pytest.raises(TypeError):
            project(psi, 0.5)
