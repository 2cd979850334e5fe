"""Noise-estimation contracts: regression residuals, degeneracy, warnings."""

import numpy as np
import pytest

from specprune import (
    HsiCube,
    SceneSpec,
    SingularRegression,
    SpecpruneError,
    denoise,
    estimate_noise_mlr,
    generate_scene,
    generate_smooth_library,
    sre,
)

from reference_impl import sre_db_reference


@pytest.fixture(scope="module")
def noisy_pair():
    lib = generate_smooth_library(6, 30, seed=31)
    scene = generate_scene(
        lib, SceneSpec(n_pixels=400, n_endmembers=4, max_purity=0.9, snr_db=20.0, seed=8)
    )
    return scene.clean_cube, scene.noisy_cube


class TestEstimate:
    def test_shapes(self, noisy_pair):
        _, noisy = noisy_pair
        est = estimate_noise_mlr(noisy)
        assert est.noise.shape == noisy.data.shape
        assert len(est.band_sigma) == noisy.n_bands

    def test_outputs_frozen(self, noisy_pair):
        _, noisy = noisy_pair
        est = estimate_noise_mlr(noisy)
        with pytest.raises(ValueError):
            est.noise[0, 0] = 1.0

    def test_near_zero_on_clean_lowrank_cube(self, noisy_pair):
        clean, _ = noisy_pair
        est = estimate_noise_mlr(clean)
        scale = np.abs(clean.data).max()
        assert np.abs(est.noise).max() < 1e-6 * scale
        assert max(est.band_sigma) < 1e-6 * scale

    def test_sigma_tracks_injected_noise(self, noisy_pair):
        clean, noisy = noisy_pair
        est = estimate_noise_mlr(noisy)
        true_sigma = (noisy.data - clean.data).std(axis=0, ddof=1).mean()
        ratio = np.mean(est.band_sigma) / true_sigma
        assert 0.75 <= ratio <= 1.25

    def test_negative_ridge_rejected(self, noisy_pair):
        _, noisy = noisy_pair
        with pytest.raises(SpecpruneError):
            estimate_noise_mlr(noisy, ridge=-1.0)

    def test_zero_ridge_singular_raises(self, rng):
        # 3 pixels over 10 bands: the normal matrix has rank <= 3
        cube = HsiCube(rng.normal(size=(3, 10)))
        with pytest.warns(UserWarning):
            with pytest.raises(SingularRegression):
                estimate_noise_mlr(cube, ridge=0.0)

    def test_underdetermined_warns_but_runs(self, rng):
        cube = HsiCube(rng.normal(size=(5, 10)))
        with pytest.warns(UserWarning, match="fewer pixels"):
            est = estimate_noise_mlr(cube)
        assert np.isfinite(est.noise).all()

    def test_single_pixel_zero_noise(self):
        cube = HsiCube(np.array([[1.0, 2.0, 3.0]]))
        with pytest.warns(UserWarning, match="single-pixel"):
            est = estimate_noise_mlr(cube)
        assert np.all(est.noise == 0.0)
        assert all(s == 0.0 for s in est.band_sigma)

    def test_all_zero_cube(self):
        cube = HsiCube(np.zeros((8, 5)))
        with pytest.warns(UserWarning, match="all-zero"):
            est = estimate_noise_mlr(cube)
        assert np.all(est.noise == 0.0)


class TestDenoise:
    def test_subtraction_identity(self, noisy_pair):
        _, noisy = noisy_pair
        est = estimate_noise_mlr(noisy)
        den = denoise(noisy)
        assert np.array_equal(den.data, noisy.data - est.noise)

    def test_improves_sre_at_snr20(self, noisy_pair):
        clean, noisy = noisy_pair
        den = denoise(noisy)
        assert sre(clean, den) > sre(clean, noisy)

    def test_sre_agrees_with_reference(self, noisy_pair):
        clean, noisy = noisy_pair
        den = denoise(noisy)
        assert sre(clean, den) == pytest.approx(
            sre_db_reference(clean.data, den.data), rel=1e-12
        )

    def test_metadata_preserved(self, rng):
        wl = tuple(float(w) for w in range(400, 430, 3))
        cube = HsiCube(rng.normal(size=(12, 10)), wavelengths=wl, lines=3, samples=4)
        den = denoise(cube)
        assert den.wavelengths == wl
        assert (den.lines, den.samples) == (3, 4)

    def test_deterministic(self, noisy_pair):
        _, noisy = noisy_pair
        a = denoise(noisy)
        b = denoise(noisy)
        assert np.array_equal(a.data, b.data)
