"""Second-iterate growth experiment: oracle quadrature and lattice pipeline.

Expected values below were computed with the lens quadrature oracle first
(cross-validated against a direct two-variable panelling and the t -> 0
area law) and then frozen.
"""

import numpy as np
import pytest

from qdnls.model import make_coefficients
from qdnls.inflation import (
    AnnulusDataSpec,
    annulus_spec,
    fc_quadrature_oracle,
    kernel_cos,
    kernel_full,
    lens_area,
    norm_inflation_experiment,
    phi_on_axis,
    pipeline_agreement,
    required_points_per_dim,
    second_iterate_grid_value,
    second_iterate_hs_norm,
    second_iterate_lens_integral,
    _lens_quadrature_cartesian,
)
from qdnls.reports import loglog_fit

C0 = make_coefficients(1, -1, 0.5)


class TestAnnulusSpec:
    def test_radii(self):
        spec = annulus_spec(C0, 0.0, 64)
        assert spec.d1 == (64.0, 65.0)
        assert spec.d2 == (64.0, 65.0)  # p = 1
        assert spec.d_target[0] == 129.0
        assert spec.d_target[1] == 129.0 + 2.0**-10

    def test_data_norms_order_one(self):
        # %N: amplitude N^{-s-1/2} keeps |f|_{H^s} ~ |g|_{H^s} ~ 1 (factor 4)
        for s in (0.0, 0.25, 0.75):
            for N in (16, 128):
                spec = annulus_spec(C0, s, N)
                assert 0.25 <= spec.hs_norm_f() <= 4.0
                assert 0.25 <= spec.hs_norm_g() <= 4.0

    def test_theta_zero_required(self):
        with pytest.raises(ValueError, match="theta = 0"):
            annulus_spec(make_coefficients(2, 1, 1), 0.0, 16)

    def test_negative_p_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            AnnulusDataSpec(N=16, s=0.0, p=-1.0)


class TestKernels:
    def test_cos_kernel_small_argument_series(self):
        phi = np.array([0.0, 1e-9, 1e-3])
        t = 1e-4
        out = kernel_cos(phi, t)
        assert out[0] == t
        assert np.allclose(out, t * (1 - (t * phi) ** 2 / 6), rtol=0, atol=1e-18)

    def test_full_kernel_matches_closed_form(self):
        phi = np.array([0.3, -2.0, 40.0])
        t = 0.7
        expected = (np.exp(-1j * t * phi) - 1.0) / (-1j * phi)
        assert np.allclose(kernel_full(phi, t), expected, rtol=1e-13)
        assert kernel_full(np.array([0.0]), t)[0] == pytest.approx(t)

    def test_real_part_of_full_is_cos_kernel(self):
        phi = np.linspace(-30, 30, 101)
        t = 0.21
        assert np.allclose(kernel_full(phi, t).real, kernel_cos(phi, t), atol=1e-15)


class TestPhi:
    def test_factored_phi_matches_direct_resonance(self):
        # on-axis closed form vs alpha|eta|^2 - beta|xi-eta|^2 - gamma|xi|^2
        spec = annulus_spec(C0, 0.0, 32)
        rng = np.random.default_rng(3)
        c = 2.0**-11
        eta1 = 32 + rng.uniform(0, 1, size=50)
        eta2 = rng.uniform(-8, 8, size=50)
        xc = spec.d_target[0] + c
        direct = (
            C0.alpha * (eta1**2 + eta2**2)
            - C0.beta * ((xc - eta1) ** 2 + eta2**2)
            - C0.gamma * xc**2
        )
        fact = phi_on_axis(spec, C0, c, eta1, eta2)
        assert np.max(np.abs(direct - fact)) <= 1e-9 * np.max(np.abs(direct))


class TestOracle:
    def test_small_t_limit_is_area_law(self):
        # t -> 0+: F -> t * |E| (the integrand degenerates to t on the lens)
        for N in (16, 64):
            t = 1e-7
            F = fc_quadrature_oracle(C0, 0.0, N, 0.0, t)
            assert F == pytest.approx(t * lens_area(C0, 0.0, N, 0.0), rel=2e-3)

    def test_frozen_value(self):
        assert fc_quadrature_oracle(C0, 0.0, 32, 0.0, 0.01) == pytest.approx(
            7.59516e-02, rel=1e-5
        )

    def test_against_cartesian_reference(self):
        spec = annulus_spec(C0, 0.0, 32)
        ref = _lens_quadrature_cartesian(spec, C0, 0.0, 0.05, kernel_cos, 512, 256)
        osc = second_iterate_lens_integral(C0, 0.0, 32, 0.0, 0.05, kernel="cos")
        assert osc == pytest.approx(ref, rel=1e-6)

    def test_large_anchor_t_exponent(self):
        # |F| >= c0 t^{1/2} once the oscillation scale 2Nt >> 1; the fitted
        # exponent approaches 1/2 at large N (frozen anchor N = 8192)
        ts = np.geomspace(1e-3, 1e-1, 7)
        Fs = [fc_quadrature_oracle(C0, 0.0, 8192, 0.0, t) for t in ts]
        slope, stderr, _ = loglog_fit(ts, Fs)
        assert abs(slope - 0.5) <= 0.1
        assert min(Fs / np.sqrt(ts)) > 0.1  # c0 bounded away from zero

    def test_c_out_of_band_rejected(self):
        with pytest.raises(ValueError, match="c must lie"):
            fc_quadrature_oracle(C0, 0.0, 16, 0.01, 0.1)


class TestGridPipeline:
    def test_agreement_with_oracle(self):
        # %N <= 64: lattice sum at step 1/32 within 5% of the oracle
        for N in (16, 32, 64):
            rel, grid, oracle = pipeline_agreement(C0, 0.0, N, 0.1, 1 / 32)
            assert rel <= 0.05, (N, rel)

    def test_under_resolved_grid_rejected(self):
        spec = annulus_spec(C0, 0.0, 64)
        need = required_points_per_dim(spec, 1 / 32)
        with pytest.raises(ValueError, match="under-resolved"):
            pipeline_agreement(C0, 0.0, 64, 0.1, 1 / 32, points_per_dim=need // 2)

    def test_radial_symmetry_at_rotated_targets(self):
        # N = 22: |xi_c| = 45 and 45^2 = 27^2 + 36^2, so the lattice holds a
        # genuinely rotated target of equal radius
        vals = [
            abs(second_iterate_grid_value(C0, 0.0, 22, tgt, 0.05, 1 / 32))
            for tgt in [(45.0, 0.0), (27.0, 36.0), (0.0, 45.0)]
        ]
        for v in vals[1:]:
            assert v == pytest.approx(vals[0], rel=0.03)

    def test_off_lattice_target_rejected(self):
        with pytest.raises(ValueError, match="not on the lattice"):
            second_iterate_grid_value(C0, 0.0, 16, (33.01, 0.0), 0.05, 1 / 32)

    def test_zero_time_gives_zero(self):
        v = second_iterate_grid_value(C0, 0.0, 16, 0.0, 0.0, 1 / 16, kernel="full")
        assert v == 0.0


class TestExperiment:
    def test_n_slope_report(self):
        rep = norm_inflation_experiment(C0, 0.0, [16, 32, 64, 128], [0.1])
        fit = rep["n_slope_fits"]["0.1"]
        assert fit is not None
        # frozen oracle measurement: slope 0.627 +- 0.016 at t = 0.1
        assert fit["exponent"] == pytest.approx(0.627, abs=0.01)
        assert rep["targets"]["n_slope"] == 0.5

    def test_no_fit_below_four_points(self):
        rep = norm_inflation_experiment(C0, 0.0, [16, 32], [0.1])
        assert rep["n_slope_fits"] == {}

    def test_norm_scales_with_data_amplitude(self):
        # s enters the restricted norm only through N^{-2s-1} and the weight
        n0 = second_iterate_hs_norm(C0, 0.0, 32, 0.05)
        n1 = second_iterate_hs_norm(C0, 0.25, 32, 0.05)
        spec0 = annulus_spec(C0, 0.0, 32)
        spec1 = annulus_spec(C0, 0.25, 32)
        r = spec0.d_target[0]
        expected = (spec1.amplitude / spec0.amplitude) ** 2 * (1 + r * r) ** 0.125
        assert n1 / n0 == pytest.approx(expected, rel=1e-4)
