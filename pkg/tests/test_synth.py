import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from terrapsd import pipeline, preprocess as pp, spectrum as sp, synth
from terrapsd.errors import InvalidArgumentError

N, B = 112, 0.008
ISO_C = synth.SurfaceModel(16e-6, -2.0)


class TestProfiles:
    def test_zero_model(self):
        np.testing.assert_array_equal(synth.generate_profile(synth.SurfaceModel(0.0), N, B, seed=1), 0.0)

    @given(st.integers(0, 2**31), st.floats(-3.0, -1.5))
    def test_periodogram_exact_per_bin(self, seed, w):
        # cosines sit on the exact bins, so every realisation carries the target PSD
        model = synth.SurfaceModel(50e-6, w)
        z = synth.generate_profile(model, N, B, seed)
        phi = sp.welch_psd(z - z.mean(), B, check=False).phi
        np.testing.assert_allclose(phi, model.psd(sp.make_waveband(N, B).omega), rtol=1e-9)

    def test_realised_variance_is_discrete_sum(self):
        rows = synth.generate_profiles(ISO_C, N, B, 500, seed=3)
        expected = synth.expected_variance(ISO_C, N, B)
        np.testing.assert_allclose(rows.var(axis=1), expected, rtol=1e-9)
        assert math.sqrt(expected) * 1e3 == pytest.approx(1.93, abs=0.01)

    @pytest.mark.xfail(
        strict=True,
        reason="exact-bin synthesis realises the discrete PSD sum (1.93 mm), not the band integral (1.50 mm)",
    )
    def test_rms_matches_band_integral(self):
        rows = synth.generate_profiles(ISO_C, N, B, 500, seed=3)
        rms = np.sqrt((rows**2).mean(axis=1)).mean()
        assert rms == pytest.approx(1.50e-3, rel=0.05)

    def test_band_integral_oracle(self):
        # the 1.50 mm figure is the continuous integral over the same band
        band = sp.make_waveband(N, B)
        integral = ISO_C.phi0 * (1 / band.omega_1 - 1 / band.omega_l)
        assert math.sqrt(integral) * 1e3 == pytest.approx(1.50, rel=0.01)

    @pytest.mark.parametrize("w", [-2.0, -2.59])
    def test_spectral_fidelity_central_band(self, w):
        model = synth.SurfaceModel(16e-6, w)
        rows = pp.detrend_rows(synth.generate_profiles(model, N, B, 500, seed=11), B)
        phi = sp.welch_rows(rows, B, pipeline.PIPELINE_WELCH).mean(axis=0)
        target = model.psd(sp.make_waveband(N, B).omega)
        central = slice(N // 8, 3 * N // 8)
        np.testing.assert_allclose(phi[central] / target[central], 1.0, atol=0.10)

    def test_recovery_through_pipeline(self):
        rows = synth.generate_profiles(ISO_C, N, B, 200, seed=2)
        patch = pp.ElevationPatch(rows, B, np.ones_like(rows, dtype=bool))
        res, _, _ = pipeline.analyse_patch(patch)
        assert res.R_hat == pytest.approx(16e-6, rel=0.30)
        assert res.w_hat == pytest.approx(-2.0, abs=0.15)

    def test_seeded_determinism(self):
        a = synth.generate_profiles(ISO_C, N, B, 5, seed=9)
        b = synth.generate_profiles(ISO_C, N, B, 5, seed=9)
        assert a.tobytes() == b.tobytes()
        assert not np.array_equal(a, synth.generate_profiles(ISO_C, N, B, 5, seed=10))


class TestPlaneWaves:
    def test_cuts_keep_exact_amplitudes(self):
        rows = synth.generate_profiles(ISO_C, N, B, 6, seed=4, y=np.linspace(0, 0.3, 6), spread=0.6)
        target = ISO_C.psd(sp.make_waveband(N, B).omega)
        for z in rows:
            phi = sp.welch_psd(z - z.mean(), B, check=False).phi
            np.testing.assert_allclose(phi, target, rtol=1e-9)

    def test_neighbouring_cuts_correlate(self):
        rows = synth.generate_profiles(ISO_C, N, B, 40, seed=4, spread=0.5)
        adjacent = np.mean([np.corrcoef(a, b)[0, 1] for a, b in zip(rows, rows[1:])])
        assert adjacent > 0.5

    def test_zero_spread_is_straight_crested(self):
        rows = synth.generate_profiles(ISO_C, N, B, 3, seed=4, spread=0.0)
        np.testing.assert_allclose(rows[0], rows[2], atol=1e-15)

    def test_invalid(self):
        with pytest.raises(InvalidArgumentError):
            synth.PlaneWaveSurface.random(ISO_C, N, B, 0, spread=2.0)
        with pytest.raises(InvalidArgumentError):
            synth.generate_profiles(ISO_C, N, B, 3, seed=0, y=[0.0, 1.0], spread=0.3)


class TestPatch:
    def test_shape(self):
        spec = pp.PatchSpec(width=0.4)
        patch = synth.generate_patch(ISO_C, spec, seed=0)
        assert patch.shape == (spec.m, spec.n)
        assert patch.valid.all()

    def test_seeds_differ_statistics_agree(self):
        spec = pp.PatchSpec()
        a = synth.generate_patch(ISO_C, spec, seed=0).grid
        b = synth.generate_patch(ISO_C, spec, seed=1).grid
        assert not np.array_equal(a, b)
        np.testing.assert_allclose(a.var(axis=1), b.var(axis=1), rtol=1e-9)

    def test_rows_match_single_profiles(self):
        patch = synth.generate_patch(ISO_C, pp.PatchSpec(width=0.16), seed=0)
        single = [synth.generate_profile(ISO_C, N, B, seed=s).var() for s in range(20)]
        np.testing.assert_allclose(patch.grid.var(axis=1), np.mean(single), rtol=1e-9)


def script(**kw):
    kw.setdefault("segments", [synth.Segment(ISO_C, 3)])
    return synth.TraverseScript(**kw)


class TestTraverse:
    def test_zero_attitude_round_trip(self):
        spec = pp.PatchSpec()
        for p in synth.generate_traverse(script(noise=0.0)):
            world = pp.compensate_tilt(p.cloud, p.attitude)
            patch = pp.rasterize(pp.extract_patch(world, spec), spec)
            np.testing.assert_allclose(patch.grid, p.grid, rtol=0, atol=1e-10)

    def test_tilt_round_trip(self):
        patches = synth.generate_traverse(script(noise=0.0, max_roll_deg=4.5, max_pitch_deg=4.5))
        for p in patches:
            world = pp.compensate_tilt(p.cloud, p.attitude)
            np.testing.assert_allclose(world.points, p.world, rtol=0, atol=1e-10)
            assert abs(np.degrees(p.attitude.roll)) <= 4.5 and abs(np.degrees(p.attitude.pitch)) <= 4.5

    def test_noise_level(self):
        p = synth.generate_traverse(script(noise=0.004))[0]
        clean = p.world @ pp.tilt_matrix(p.attitude)
        assert np.std(p.cloud.z - clean[:, 2]) == pytest.approx(0.004, rel=0.02)

    def test_seeded_determinism(self):
        a = synth.generate_traverse(script(seed=5, max_roll_deg=2))
        b = synth.generate_traverse(script(seed=5, max_roll_deg=2))
        for pa, pb in zip(a, b):
            assert pa.cloud.points.tobytes() == pb.cloud.points.tobytes()
            assert pa.attitude == pb.attitude
        c = synth.generate_traverse(script(seed=6, max_roll_deg=2))
        assert not np.array_equal(a[0].cloud.points, c[0].cloud.points)

    def test_segments_and_defects(self):
        segs = [synth.Segment(ISO_C, 2), synth.Segment(synth.SurfaceModel(64e-6), 3)]
        patches = synth.generate_traverse(script(segments=segs, defects=[synth.Defect(3)], noise=0))
        assert [p.segment for p in patches] == [0, 0, 1, 1, 1]
        assert [p.defect for p in patches] == [False, False, False, True, False]
        assert patches[3].grid.max() > 0.02
        assert [p.cloud.timestamp for p in patches] == [0.0, 0.5, 1.0, 1.5, 2.0]

    def test_explicit_attitudes(self):
        atts = [pp.Attitude(0.01, 0.02), (0.0, -0.03), pp.Attitude()]
        patches = synth.generate_traverse(script(attitudes=atts))
        assert patches[1].attitude == pp.Attitude(0.0, -0.03)

    def test_plane_wave_traverse_grid(self):
        patches = synth.generate_traverse(script(noise=0.0, spread=0.5, density=2, jitter=0.5))
        spec = pp.PatchSpec()
        for p in patches:
            world = pp.compensate_tilt(p.cloud, p.attitude)
            patch = pp.rasterize(pp.extract_patch(world, spec), spec)
            np.testing.assert_allclose(patch.grid, p.grid, rtol=0, atol=1e-10)

    def test_iterable_pair(self):
        cloud, att = synth.generate_traverse(script())[0]
        assert cloud.frame == "vehicle" and isinstance(att, pp.Attitude)

    @pytest.mark.parametrize(
        "kw",
        [
            dict(segments=[]),
            dict(noise=-1.0),
            dict(attitudes=[(0, 0)]),
            dict(defects=[synth.Defect(7)]),
            dict(density=0),
            dict(jitter=0.5),
        ],
    )
    def test_invalid_scripts(self, kw):
        with pytest.raises(InvalidArgumentError):
            script(**kw)

    def test_invalid_segment(self):
        with pytest.raises(InvalidArgumentError):
            synth.Segment(ISO_C, 0)
        with pytest.raises(InvalidArgumentError):
            synth.SurfaceModel(-1.0)
