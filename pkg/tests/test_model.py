import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdnls.fields import (
    Grid2D,
    SpectralField,
    VectorField,
    gradient,
    homogeneous_norm,
    l2_norm,
    random_field,
    vector_l2_norm,
)
from qdnls.model import (
    SystemState,
    make_coefficients,
    quadratic_invariants,
    resonance_phi,
    scaling_transform,
    sigma_theta_kappa,
)

nonzero = st.floats(min_value=0.1, max_value=4.0).flatmap(
    lambda m: st.sampled_from([m, -m])
)


class TestCoefficients:
    def test_known_triples(self):
        c = make_coefficients(2, 1, 1)
        assert c.theta == pytest.approx(-3.0) and c.kappa == pytest.approx(2.0)
        assert c.regime == "theta_negative"
        c = make_coefficients(1, -1, 0.5)
        assert c.theta == pytest.approx(0.0, abs=1e-14) and c.kappa == pytest.approx(-0.5)
        assert c.regime == "mass_resonance"
        c = make_coefficients(1, 1, 1)
        assert c.theta == pytest.approx(-1.0) and c.kappa == pytest.approx(0.0, abs=1e-14)
        assert c.regime == "kappa_zero"

    def test_zero_coefficient_rejected(self):
        with pytest.raises(ValueError, match="beta"):
            make_coefficients(1.0, 0.0, 1.0)

    def test_derived_recomputable(self):
        c = make_coefficients(1.7, -0.3, 2.2)
        theta = 1.7 * (-0.3) * 2.2 * (1 / 1.7 - 1 / (-0.3) - 1 / 2.2)
        kappa = (1.7 + 0.3) * (1.7 - 2.2) * (-0.3 + 2.2)
        assert abs(c.theta - theta) <= 1e-14 * abs(theta)
        assert abs(c.kappa - kappa) <= 1e-14 * abs(kappa)

    @given(nonzero, nonzero, nonzero)
    @settings(max_examples=100, deadline=None)
    def test_permutations_preserve_theta_and_abs_kappa(self, a, b, g):
        c = make_coefficients(a, b, g)
        scale = abs(a * b * g) * (1 / abs(a) + 1 / abs(b) + 1 / abs(g))
        for triple in c.sigma_triples:
            th, ka = sigma_theta_kappa(*triple)
            assert abs(th - c.theta) <= 1e-12 * max(scale, 1.0)
            assert abs(abs(ka) - abs(c.kappa)) <= 1e-10 * max(abs(c.kappa), 1.0)

    @given(nonzero, nonzero, nonzero)
    @settings(max_examples=100, deadline=None)
    def test_kappa_nonzero_when_theta_nonneg(self, a, b, g):
        c = make_coefficients(a, b, g)  # construction asserts the remark
        if c.theta >= 0:
            assert c.kappa != 0


class TestResonance:
    def setup_method(self):
        self.c0 = make_coefficients(1, -1, 0.5)

    def test_resonant_point(self):
        assert resonance_phi(self.c0, [2, 0], [1, 0]) == pytest.approx(0.0, abs=1e-14)

    def test_factored_agreement(self):
        phi = resonance_phi(self.c0, [0, 0], [1, 0])
        assert phi == pytest.approx(2.0)
        # factored: (alpha-gamma)|eta - p(xi-eta)|^2 = 0.5*|2 eta|^2 = 2

    def test_randomized_factorization(self):
        rng = np.random.default_rng(7)
        xi = rng.normal(size=(200, 2)) * 10
        eta = rng.normal(size=(200, 2)) * 10
        phi = resonance_phi(self.c0, xi, eta)  # asserts |direct-factored| internally
        direct = (
            self.c0.alpha * np.sum(eta**2, -1)
            - self.c0.beta * np.sum((xi - eta) ** 2, -1)
            - self.c0.gamma * np.sum(xi**2, -1)
        )
        assert np.max(np.abs(phi - direct)) <= 1e-10 * np.max(np.abs(direct)) + 1e-12

    def test_factored_rejected_when_alpha_equals_gamma(self):
        c = make_coefficients(1.0, 2.0, 1.0)
        with pytest.raises(ValueError, match="alpha == gamma"):
            resonance_phi(c, [1, 0], [0, 1], check_factorization=True)


def _random_state(grid, rng, band=4.0):
    vf = lambda: VectorField((random_field(grid, rng, band), random_field(grid, rng, band)))
    return SystemState(u=vf(), v=vf(), w=vf(), time=0.125)


class TestScaling:
    def setup_method(self):
        self.grid = Grid2D(8.0, 32)
        self.rng = np.random.default_rng(5)

    def test_identity(self):
        st0 = _random_state(self.grid, self.rng)
        out = scaling_transform(st0, 1.0, target_grid=self.grid)
        assert np.array_equal(out.u.components[0].coefficients, st0.u.components[0].coefficients)
        assert out.time == st0.time

    def test_l2_critical_invariance(self):
        st0 = _random_state(self.grid, self.rng)
        out = scaling_transform(st0, 2.0)
        for a, b in zip(st0.u.components, out.u.components):
            assert abs(homogeneous_norm(a, 0.0) - homogeneous_norm(b, 0.0)) <= 1e-8
            assert abs(l2_norm(a) - l2_norm(b)) <= 1e-8 * l2_norm(a)

    def test_single_mode_relocation(self):
        n = self.grid.points_per_dim
        coeffs = np.zeros((n, n), dtype=complex)
        coeffs[3, 2] = 1.0
        f = SpectralField(self.grid, coeffs)
        vf = VectorField((f, SpectralField.zero(self.grid)))
        st0 = SystemState(u=vf, v=VectorField.zero(self.grid), w=VectorField.zero(self.grid))
        out = scaling_transform(st0, 2.0)
        tgt = out.u.components[0]
        # same integer index on the doubled grid = physical frequency xi/2
        assert tgt.coefficient_at(3, 2) == pytest.approx(2.0)
        assert tgt.grid.frequency_step == pytest.approx(self.grid.frequency_step / 2)

    def test_composition(self):
        st0 = _random_state(self.grid, self.rng, band=2.0)
        one = scaling_transform(scaling_transform(st0, 2.0), 2.0)
        both = scaling_transform(st0, 4.0, target_grid=one.grid)
        err = np.max(np.abs(one.u.components[0].coefficients - both.u.components[0].coefficients))
        assert err <= 1e-12

    def test_bandwidth_rejection(self):
        st0 = _random_state(self.grid, self.rng, band=5.0)
        with pytest.raises(ValueError, match="bandwidth"):
            scaling_transform(st0, 0.5)


class TestInvariants:
    def test_zero_state(self):
        grid = Grid2D(4.0, 16)
        z = SystemState(u=VectorField.zero(grid), v=VectorField.zero(grid), w=VectorField.zero(grid))
        assert quadratic_invariants(z) == (0.0, 0.0)

    def test_v_w_zero(self):
        grid = Grid2D(4.0, 16)
        rng = np.random.default_rng(2)
        u = VectorField((random_field(grid, rng), random_field(grid, rng)))
        st0 = SystemState(u=u, v=VectorField.zero(grid), w=VectorField.zero(grid))
        m1, m2 = quadratic_invariants(st0)
        assert m1 == pytest.approx(vector_l2_norm(u) ** 2)
        assert m1 == pytest.approx(m2)

    def test_state_form_validation(self):
        grid = Grid2D(4.0, 16)
        with pytest.raises(ValueError, match="exactly one"):
            SystemState(u=VectorField.zero(grid), v=VectorField.zero(grid))
