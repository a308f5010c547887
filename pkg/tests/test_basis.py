import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anelastic.basis import (
    GridSampling,
    ResolutionError,
    SpectralField,
    analyze,
    differentiate,
    evaluate,
    inner,
    l2_norm,
    laplacian,
    make_basis,
    multiply_project,
    project,
    synthesize,
)

from conftest import random_field

seeds = st.integers(0, 2 ** 31 - 1)
orders = st.integers(1, 8)
parities = st.sampled_from(["cos", "sin"])


class TestBasisSpec:
    def test_dimension_m2(self):
        assert make_basis(2).formal_dimension == 44

    def test_dimension_m0(self):
        b = make_basis(0)
        assert b.formal_dimension == 2
        assert b.n_sin == 0

    def test_sine_count_m1(self):
        assert make_basis(1).n_sin == 3

    @given(orders)
    def test_index_sets(self, m):
        b = make_basis(m)
        assert set(b.index_set_pressure) == set(b.index_set_velocity) - {(0, 0)}
        assert len(b.index_set_velocity) == (2 * m + 1) * (m + 1)
        assert b.formal_dimension == 3 * (2 * m + 1) * (m + 1) - 1
        assert b.active_mask("sin").sum() == (2 * m + 1) * m
        assert not b.active_mask("sin")[:, 0].any()

    def test_negative_order(self):
        with pytest.raises(ValueError):
            make_basis(-1)

    def test_vector_round_trip(self, rng):
        f = random_field(4, "sin", rng)
        b = f.basis
        back = b.from_vector(b.to_vector(f), "sin")
        np.testing.assert_allclose(back.coeffs, f.coeffs, atol=1e-15)
        assert np.isclose(np.vdot(b.to_vector(f), b.to_vector(f)).real, l2_norm(f) ** 2)


class TestSpectralField:
    def test_sine_slot_zeroed(self):
        b = make_basis(2)
        f = SpectralField(b, "sin", np.ones(b.shape))
        assert np.all(f.coeffs[:, 0] == 0)

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            SpectralField(make_basis(2), "cos", np.zeros((3, 3)))

    def test_bad_parity(self):
        with pytest.raises(ValueError):
            SpectralField.zeros(make_basis(2), "tan")

    def test_mixed_arithmetic_rejected(self):
        b = make_basis(2)
        with pytest.raises(ValueError):
            SpectralField.zeros(b, "cos") + SpectralField.zeros(b, "sin")

    @given(seeds, orders, parities)
    def test_operations_keep_hermitian(self, seed, m, parity):
        f = random_field(m, parity, np.random.default_rng(seed))
        assert f.is_hermitian()
        for g in (differentiate(f, "x"), differentiate(f, "z"), laplacian(f), project(f, m + 2), project(f, 1),
                  2.0 * f - f):
            assert g.is_hermitian()
            if g.parity == "sin":
                assert np.all(g.coeffs[..., 0] == 0)


class TestProject:
    def test_identity_on_space(self, rng):
        f = random_field(5, "cos", rng)
        np.testing.assert_array_equal(project(f, 5).coeffs, f.coeffs)
        np.testing.assert_array_equal(project(project(f, 8), 5).coeffs, f.coeffs)

    def test_mode_outside_is_dropped(self):
        m = 3
        f = SpectralField.mode(make_basis(m + 1), "cos", m + 1, 0)
        assert np.all(project(f, m).coeffs == 0)

    @given(seeds, orders, st.integers(0, 8), parities)
    def test_contraction_and_idempotence(self, seed, m, m_out, parity):
        f = random_field(m, parity, np.random.default_rng(seed))
        p = project(f, m_out)
        assert l2_norm(p) <= l2_norm(f) * (1 + 1e-14)
        np.testing.assert_array_equal(project(p, m_out).coeffs, p.coeffs)

    @given(seeds, st.integers(1, 5), parities)
    def test_self_adjoint(self, seed, m, parity):
        rng = np.random.default_rng(seed)
        big = m + 3
        f, g = random_field(big, parity, rng), random_field(big, parity, rng)
        lhs = inner(project(project(f, m), big), g)
        rhs = inner(f, project(project(g, m), big))
        assert np.isclose(lhs, rhs, rtol=1e-13, atol=1e-13)


class TestDifferentiate:
    def test_dz_cos(self):
        b = make_basis(2)
        d = differentiate(SpectralField.mode(b, "cos", 0, 1), "z")
        assert d.parity == "sin"
        expected = np.zeros(b.shape)
        expected[2, 1] = -np.pi
        np.testing.assert_allclose(d.coeffs, expected)

    def test_dz_sin(self):
        b = make_basis(2)
        d = differentiate(SpectralField.mode(b, "sin", 0, 2), "z")
        assert d.parity == "cos"
        assert np.isclose(d.coeffs[2, 2], 2 * np.pi)

    def test_dx_exponential(self):
        b = make_basis(2)
        c = np.zeros(b.shape, complex)
        c[3, 0] = 1.0  # e^{i pi x}
        d = differentiate(SpectralField(b, "cos", c), "x")
        assert np.isclose(d.coeffs[3, 0], 1j * np.pi)

    def test_laplacian_eigenvalue(self):
        b = make_basis(2)
        f = SpectralField.mode(b, "cos", 1, 1)
        assert np.isclose(laplacian(f).coeffs[3, 1], -2 * np.pi ** 2)
        assert np.isclose(-2 * np.pi ** 2, -19.7392, atol=1e-4)

    def test_bad_axis(self):
        with pytest.raises(ValueError):
            differentiate(SpectralField.zeros(make_basis(1), "cos"), "y")

    @given(seeds, orders, parities)
    def test_laplacian_is_composition(self, seed, m, parity):
        f = random_field(m, parity, np.random.default_rng(seed))
        comp = differentiate(differentiate(f, "x"), "x") + differentiate(differentiate(f, "z"), "z")
        np.testing.assert_allclose(comp.coeffs, laplacian(f).coeffs, atol=1e-12)


class TestTransforms:
    @given(seeds, orders, parities)
    def test_round_trip(self, seed, m, parity):
        f = random_field(m, parity, np.random.default_rng(seed))
        grid = GridSampling(2 * m + 1, 2 * m + 1)
        back = analyze(synthesize(f, grid), parity, m)
        scale = np.max(np.abs(f.coeffs))
        assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-12 * scale

    def test_zero_field(self):
        f = SpectralField.zeros(make_basis(3), "cos")
        assert np.all(synthesize(f, GridSampling(7, 7)) == 0)

    def test_cos_at_half(self):
        f = SpectralField.mode(make_basis(2), "cos", 0, 1)
        val = evaluate(f.coeffs, "cos", np.array([0.3]), np.array([0.5]))
        assert abs(val[0, 0]) <= 1e-14

    def test_coarse_grid_rejected(self):
        with pytest.raises(ResolutionError):
            analyze(np.zeros((4, 4)), "cos", 3)

    def test_non_hermitian_rejected(self):
        b = make_basis(1)
        c = np.zeros(b.shape, complex)
        c[2, 0] = 1.0
        with pytest.raises(ValueError):
            synthesize(SpectralField(b, "cos", c), GridSampling(5, 5))

    @given(seeds, orders, parities)
    def test_parseval(self, seed, m, parity):
        f = random_field(m, parity, np.random.default_rng(seed))
        grid = GridSampling(2 * m + 2, 2 * m + 2)
        quad = np.mean(synthesize(f, grid) ** 2) * 4.0
        assert np.isclose(quad, l2_norm(f) ** 2, rtol=1e-12)


class TestMultiplyProject:
    def test_unit_factor(self, rng):
        g = random_field(4, "sin", rng)
        one = SpectralField.mode(make_basis(2), "cos", 0, 0)
        out = multiply_project(one, g, 3)
        np.testing.assert_allclose(out.coeffs, project(g, 3).coeffs, atol=1e-14)

    def test_cos_squared(self):
        f = SpectralField.mode(make_basis(1), "cos", 0, 1)
        out = multiply_project(f, f, 2)
        expected = np.zeros(make_basis(2).shape)
        expected[2, 0] = 0.5
        expected[2, 2] = 0.5
        np.testing.assert_allclose(out.coeffs, expected, atol=1e-15)
        low = multiply_project(f, f, 1)
        assert np.isclose(low.coeffs[1, 0], 0.5) and np.isclose(low.coeffs[1, 1], 0.0)

    @pytest.mark.parametrize("p,q,expected", [("cos", "cos", "cos"), ("cos", "sin", "sin"),
                                              ("sin", "cos", "sin"), ("sin", "sin", "cos")])
    def test_output_parity(self, rng, p, q, expected):
        out = multiply_project(random_field(2, p, rng), random_field(3, q, rng), 2)
        assert out.parity == expected

    @given(seeds, st.integers(1, 8), st.integers(1, 8), parities, parities, st.integers(1, 10))
    def test_exact_matches_oracle(self, seed, mf, mg, p, q, m):
        rng = np.random.default_rng(seed)
        f, g = random_field(mf, p, rng), random_field(mg, q, rng)
        a = multiply_project(f, g, m, "exact").coeffs
        b = multiply_project(f, g, m, "oracle").coeffs
        assert np.max(np.abs(a - b)) <= 1e-12 * max(np.max(np.abs(b)), 1e-300)

    def test_usage_errors(self, rng):
        f = random_field(2, "cos", rng)
        with pytest.raises(TypeError):
            multiply_project(f, np.ones(3), 2)
        with pytest.raises(ValueError):
            multiply_project(f, f, 2, mode="fft")
