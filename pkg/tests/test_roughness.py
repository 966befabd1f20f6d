import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from terrapsd import pipeline, preprocess as pp, roughness as rf, spectrum as sp, synth
from terrapsd.errors import DegeneratePatchError, InvalidArgumentError, UnfittableSpectrumError

BAND = sp.make_waveband(112, 0.008)


class TestFit:
    def test_exact_iso_c(self):
        fit = rf.fit_power_law(BAND.omega, 16e-6 * BAND.omega**-2.0)
        assert fit.R == pytest.approx(16e-6, rel=1e-12)
        assert fit.w == pytest.approx(-2.0, rel=1e-12)
        assert fit.residual_rms < 1e-12
        assert fit.bins_used == 56
        assert fit.b == math.log(fit.R)

    def test_flat(self):
        fit = rf.fit_power_law(BAND.omega, np.full(56, 3e-7))
        assert fit.w == pytest.approx(0.0, abs=1e-12)
        assert fit.R == pytest.approx(3e-7, rel=1e-12)

    @given(st.floats(-3.5, 0.0), st.floats(-20, 0), st.integers(4, 200))
    def test_fit_consistency(self, w, b, half):
        band = sp.make_waveband(2 * half, 0.01)
        fit = rf.fit_power_law(band.omega, math.exp(b) * band.omega**w)
        assert fit.w == pytest.approx(w, rel=1e-12, abs=1e-12)
        assert fit.b == pytest.approx(b, rel=1e-12, abs=1e-12)

    @given(st.integers(0, 2**31))
    def test_matches_polyfit_oracle(self, seed):
        phi = np.exp(np.random.default_rng(seed).normal(-10, 2, 56))
        fit = rf.fit_power_law(BAND.omega, phi)
        slope, icpt = np.polyfit(np.log(BAND.omega), np.log(phi), 1)
        assert fit.w == pytest.approx(slope, rel=1e-10)
        assert fit.b == pytest.approx(icpt, rel=1e-10)

    def test_zero_bins_dropped(self):
        phi = 16e-6 * BAND.omega**-2.0
        phi[::3] = 0.0
        fit = rf.fit_power_law(BAND.omega, phi)
        assert fit.bins_used == 56 - 19
        assert fit.w == pytest.approx(-2.0, rel=1e-12)

    @pytest.mark.parametrize("positive", [0, 1, 2])
    def test_unfittable(self, positive):
        phi = np.zeros(56)
        phi[:positive] = 1e-6
        with pytest.raises(UnfittableSpectrumError):
            rf.fit_power_law(BAND.omega, phi)

    def test_accepts_estimate(self):
        est = sp.SpectrumEstimate(BAND, 4e-6 * BAND.omega**-2.5)
        assert rf.fit_power_law(est).w == pytest.approx(-2.5)

    def test_rows_flag_unfittable(self):
        phi = np.vstack([16e-6 * BAND.omega**-2.0, np.zeros(56)])
        res = rf.fit_rows(BAND.omega, phi)
        np.testing.assert_array_equal(res["ok"], [True, False])
        assert np.isnan(res["w"][1])


class TestAggregate:
    def test_two_profiles(self):
        res = rf.aggregate_patch((np.array([-6.0, -8.0]), np.array([-2.0, -2.4])), BAND)
        assert res.R_hat == pytest.approx(9.119e-4, abs=5e-8)
        assert res.R_hat == pytest.approx(math.exp(-7), rel=1e-15)
        assert res.w_hat == pytest.approx(-2.2, rel=1e-15)
        assert res.sigma_w == pytest.approx(0.2828, abs=5e-5)
        assert res.sigma_R == pytest.approx(1.2896e-3, abs=5e-8)
        assert res.sigma_R == pytest.approx(math.exp(-7) * math.sqrt(2), rel=1e-14)
        assert res.band is BAND

    def test_from_profile_objects(self):
        profs = [rf.ProfileRoughness(math.exp(b), w, b, 0.0, 56) for b, w in [(-6, -2.0), (-8, -2.4)]]
        assert rf.aggregate_patch(profs).w_hat == pytest.approx(-2.2)

    def test_identical_profiles(self):
        fit = rf.fit_power_law(BAND.omega, 7e-5 * BAND.omega**-2.3)
        res = rf.aggregate_patch([fit] * 9)
        assert res.sigma_R == 0.0 and res.sigma_w == 0.0
        assert res.R_hat == pytest.approx(fit.R, rel=1e-15)

    @given(st.integers(0, 2**31), st.integers(2, 120))
    def test_permutation_invariant(self, seed, m):
        r = np.random.default_rng(seed)
        b, w = r.normal(-9, 1, m), r.normal(-2.2, 0.2, m)
        perm = r.permutation(m)
        a = rf.aggregate_patch((b, w))
        c = rf.aggregate_patch((b[perm], w[perm]))
        assert (a.R_hat, a.sigma_R, a.w_hat, a.sigma_w) == (c.R_hat, c.sigma_R, c.w_hat, c.sigma_w)

    def test_sample_std(self, rng):
        b, w = rng.normal(size=30), rng.normal(size=30)
        res = rf.aggregate_patch((b, w))
        assert res.sigma_w == pytest.approx(np.std(w, ddof=1), rel=1e-12)
        assert res.sigma_b == pytest.approx(np.std(b, ddof=1), rel=1e-12)

    def test_needs_two(self):
        with pytest.raises(DegeneratePatchError):
            rf.aggregate_patch((np.array([-7.0]), np.array([-2.0])))

    def test_scatter(self):
        res = rf.aggregate_patch((np.array([-6.0, -8.0]), np.array([-2.0, -2.4])))
        rows = res.scatter_rows()
        assert rows[-1] == ("patch", res.w_hat, res.b_mean)
        assert [r[0] for r in rows[:-1]] == ["profile", "profile"]

    def test_ploughed_patch_recovers_targets(self):
        # 112 profiles of one synthetic patch through the pipeline analysis
        model = synth.SurfaceModel(1734e-6, -2.59)
        patch = synth.generate_patch(model, pp.PatchSpec(), seed=5)
        res, _, _ = pipeline.analyse_patch(patch)
        # per-profile spreads of ln R and w bound the patch means
        assert abs(math.log(res.R_hat / model.phi0)) < 3 * res.sigma_b / math.sqrt(res.m) + 0.3
        assert abs(res.w_hat - model.w) < 3 * res.sigma_w / math.sqrt(res.m) + 0.15


class TestDelta:
    def test_exp_at_zero(self):
        mu, var = rf.delta_method(0.0, 0.04, "exp")
        assert mu == 1.0
        assert math.sqrt(var) == pytest.approx(0.2, rel=1e-15)

    def test_identity(self):
        assert rf.delta_method(-3.5, 0.7, "identity") == (-3.5, 0.7)

    @given(st.floats(-20, 5), st.floats(0, 4))
    def test_exp_law(self, mu, var):
        mu_y, var_y = rf.delta_method(mu, var)
        assert var_y == pytest.approx(mu_y**2 * var, rel=1e-15, abs=0)

    def test_monte_carlo(self, rng):
        mu, sigma = -7.0, 0.05
        draws = np.exp(rng.normal(mu, sigma, 100_000))
        _, var = rf.delta_method(mu, sigma**2)
        assert math.sqrt(var) == pytest.approx(draws.std(), rel=0.01)

    def test_negative_variance(self):
        with pytest.raises(InvalidArgumentError):
            rf.delta_method(0.0, -1e-9)

    def test_unknown_transform(self):
        with pytest.raises(InvalidArgumentError):
            rf.delta_method(0.0, 1.0, "log")


class TestScalingLaw:
    @given(st.integers(0, 2**31), st.floats(0.01, 100))
    def test_amplitude_scaling(self, seed, c):
        spec = pp.PatchSpec(width=0.08)
        patch = synth.generate_patch(synth.SurfaceModel(64e-6, -2.3), spec, seed=seed)
        scaled = pp.ElevationPatch(c * patch.grid, patch.step, patch.valid)
        a, _, _ = pipeline.analyse_patch(patch)
        b, _, _ = pipeline.analyse_patch(scaled)
        np.testing.assert_allclose(b.b, a.b + 2 * math.log(c), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(b.w, a.w, rtol=1e-12, atol=1e-12)
        assert b.R_hat == pytest.approx(c * c * a.R_hat, rel=1e-12)
        assert b.sigma_w == pytest.approx(a.sigma_w, rel=1e-9, abs=1e-14)
