import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anelastic.basis import SpectralField, differentiate, l2_norm, make_basis, project
from anelastic.constraint import (
    PressureSolveError,
    anelastic_stream_field,
    assemble_pressure_operator,
    correct_initial_data,
    divergence_residual,
    pressure_rhs,
    solve_pressure,
)
from anelastic.density import DensityProfile
from anelastic.galerkin import assemble_operators
from anelastic.initial import random_fields

from conftest import random_field
from oracles import leray_projection

UNIT = DensityProfile(0, 1.0)
VAR = DensityProfile(2, 0.5)


def _op(m, density):
    return assemble_pressure_operator(make_basis(m), density)


def _pressure_index(m, k1, k2):
    flat = (k1 + m) * (m + 1) + k2
    return flat - 1 if flat > m * (m + 1) else flat


class TestPressureOperator:
    def test_unit_density_entry(self):
        op = _op(2, UNIT)
        i = _pressure_index(2, 1, 1)
        assert np.isclose(op.matrix[i, i], -2 * np.pi ** 2)

    def test_unit_density_diagonal(self):
        op = _op(4, UNIT)
        b = make_basis(4)
        lam = -np.pi ** 2 * (b.k1[:, None] ** 2 + b.k2[None, :] ** 2)
        expected = np.delete(lam.ravel(), 4 * 5)
        np.testing.assert_allclose(op.matrix, np.diag(expected), atol=1e-10)

    def test_symmetric(self):
        A = _op(8, VAR).matrix
        assert np.max(np.abs(A - A.conj().T)) <= 1e-12 * np.linalg.norm(A, 2)

    @pytest.mark.parametrize("eps", [1.0, 0.1, 0.01])
    def test_negative_definite(self, eps):
        A = _op(8, DensityProfile(2, eps)).matrix
        assert np.linalg.eigvalsh(-A).min() > 0

    def test_condition_reported(self):
        op = _op(4, VAR)
        lo, hi = op.eigenvalue_range
        assert 0 < lo <= hi
        assert np.isclose(op.condition, hi / lo)
        assert op.min_eigenvalue == lo

    def test_condition_grows_as_eps_shrinks(self):
        conds = [_op(4, DensityProfile(3, e)).condition for e in (1.0, 0.1, 0.01, 1e-3)]
        assert all(b >= a for a, b in zip(conds, conds[1:]))

    def test_error_carries_condition(self):
        err = PressureSolveError("boom", condition=1e18)
        assert err.condition == 1e18 and "boom" in str(err)


class TestSolvePressure:
    def test_zero_state(self):
        b = make_basis(4)
        p = solve_pressure(_op(4, VAR), SpectralField.zeros(b, "cos"), SpectralField.zeros(b, "sin"))
        assert np.all(p.coeffs == 0)

    def test_unit_density_shear(self):
        b = make_basis(4)
        v = SpectralField.mode(b, "cos", 0, 1)
        p = solve_pressure(_op(4, UNIT), v, SpectralField.zeros(b, "sin"))
        assert np.max(np.abs(p.coeffs)) <= 1e-13

    def test_mean_zero_and_solve_residual(self, rng):
        m = 8
        ops = assemble_operators(m, VAR)
        op = _op(m, VAR)
        v, w = random_fields(m, seed=3)
        c = correct_initial_data(v, w, make_basis(m), VAR)
        a = ops.vector(c.v, c.w)
        rhs = pressure_rhs(ops, a)
        b = op.solve(rhs)
        assert np.linalg.norm(op.matrix @ b - rhs) <= 1e-11 * np.linalg.norm(rhs)
        p = solve_pressure(op, c.v, c.w)
        assert p.coeffs[m, 0] == 0


class TestDivergenceResidual:
    def test_zero(self):
        b = make_basis(3)
        assert divergence_residual(SpectralField.zeros(b, "cos"), SpectralField.zeros(b, "sin"), VAR) == 0

    def test_unit_density_shear(self):
        b = make_basis(3)
        v = SpectralField.mode(b, "cos", 0, 1)
        assert divergence_residual(v, SpectralField.zeros(b, "sin"), UNIT) <= 1e-14

    @given(st.integers(0, 1000))
    def test_non_negative(self, seed):
        rng = np.random.default_rng(seed)
        assert divergence_residual(random_field(3, "cos", rng), random_field(3, "sin", rng), VAR) >= 0


class TestCorrection:
    @pytest.mark.parametrize("density", [VAR, DensityProfile(3, 0.1), DensityProfile(2, 0.5, 0.05)])
    def test_output_satisfies_constraint(self, density):
        v, w = random_fields(8, seed=5)
        c = correct_initial_data(v, w, make_basis(8), density)
        assert divergence_residual(c.v, c.w, density) <= 1e-10
        assert c.correction_norm > 0

    def test_already_compatible(self):
        v, w = random_fields(6, seed=2)
        once = correct_initial_data(v, w, make_basis(6), VAR)
        twice = correct_initial_data(once.v, once.w, make_basis(6), VAR)
        assert twice.correction_norm <= 1e-12 * l2_norm(once.v)
        np.testing.assert_allclose(twice.v.coeffs, once.v.coeffs, atol=1e-12 * np.abs(once.v.coeffs).max())
        np.testing.assert_allclose(twice.w.coeffs, once.w.coeffs, atol=1e-12 * np.abs(once.w.coeffs).max())

    def test_unit_density_removes_gradient(self, rng):
        phi = random_field(5, "cos", rng)
        c = correct_initial_data(differentiate(phi, "x"), differentiate(phi, "z"), make_basis(5), UNIT)
        assert np.max(np.abs(c.v.coeffs)) <= 1e-12 and np.max(np.abs(c.w.coeffs)) <= 1e-12

    @given(st.integers(0, 10_000), st.integers(1, 8))
    def test_matches_leray(self, seed, m):
        rng = np.random.default_rng(seed)
        v, w = random_field(m, "cos", rng), random_field(m, "sin", rng)
        c = correct_initial_data(v, w, make_basis(m), UNIT)
        lv, lw = leray_projection(v, w)
        scale = max(np.abs(v.coeffs).max(), np.abs(w.coeffs).max())
        assert np.max(np.abs(c.v.coeffs - lv.coeffs)) <= 1e-11 * scale
        assert np.max(np.abs(c.w.coeffs - lw.coeffs)) <= 1e-11 * scale

    def test_correction_shrinks_with_m(self):
        # raw data: an exactly constraint-satisfying continuous field, resolved far beyond m
        v, w = anelastic_stream_field("sin(pi*z)**2*cos(pi*x)", VAR, 64)
        norms = {}
        for m in (8, 16):
            norms[m] = correct_initial_data(project(v, m), project(w, m), make_basis(m), VAR).correction_norm
        assert norms[16] <= 0.5 * norms[8]


class TestStreamField:
    def test_zero(self):
        v, w = anelastic_stream_field("0", VAR, 4)
        assert np.all(v.coeffs == 0) and np.all(w.coeffs == 0)

    def test_unit_density_exactly_solenoidal(self):
        m = 4
        v, w = anelastic_stream_field("2*sin(pi*z)*cos(pi*x)", UNIT, m)
        # v = 2 pi cos(pi z) cos(pi x): coefficient pi at (+-1, 1); w = 2 pi sin(pi z) sin(pi x)
        assert np.isclose(v.coeffs[m + 1, 1], np.pi) and np.isclose(v.coeffs[m - 1, 1], np.pi)
        assert np.isclose(w.coeffs[m + 1, 1], -1j * np.pi) and np.isclose(w.coeffs[m - 1, 1], 1j * np.pi)
        assert divergence_residual(v, w, UNIT) <= 1e-12

    def test_residual_decays(self):
        r8 = divergence_residual(*anelastic_stream_field("sin(pi*z)**2", VAR, 8), VAR)
        r16 = divergence_residual(*anelastic_stream_field("sin(pi*z)**2", VAR, 16), VAR)
        # x-independent: both already sit at round-off
        assert r16 <= 1e-6 and r16 <= max(r8 / 10, 1e-12)

    def test_x_dependent_residual_decays(self):
        res = [divergence_residual(*anelastic_stream_field("sin(pi*z)**2*cos(pi*x)", VAR, m), VAR)
               for m in (8, 16, 32)]
        assert res[0] > res[1] > res[2]
