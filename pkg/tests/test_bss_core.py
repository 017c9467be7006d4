import numpy as np
import pytest

from sepex.bss import core


def random_mixture(rng, n_src=2, n_bins=5, n_frames=8):
    shape = (n_src, n_bins, n_frames)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_demixing(rng, n_src, n_bins):
    w = rng.standard_normal((n_bins, n_src, n_src)) + 1j * rng.standard_normal(
        (n_bins, n_src, n_src)
    )
    return w + 2.0 * np.eye(n_src)  # keep well-conditioned


def random_spd(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T + 0.1 * np.eye(n)


class TestDemix:
    def test_identity(self):
        rng = np.random.default_rng(0)
        x = random_mixture(rng)
        w = np.tile(np.eye(2, dtype=complex), (5, 1, 1))
        np.testing.assert_array_equal(core.demix(x, w), x)

    def test_scaling(self):
        rng = np.random.default_rng(1)
        x = random_mixture(rng)
        w = np.tile(2.0 * np.eye(2, dtype=complex), (5, 1, 1))
        np.testing.assert_allclose(core.demix(x, w), 2.0 * x)

    def test_matches_per_bin_product(self):
        rng = np.random.default_rng(2)
        x = random_mixture(rng)
        w = random_demixing(rng, 2, 5)
        y = core.demix(x, w)
        for f in range(5):
            for t in range(8):
                np.testing.assert_allclose(y[:, f, t], w[f] @ x[:, f, t], atol=1e-12)

    def test_linear_in_input(self):
        rng = np.random.default_rng(3)
        x1, x2 = random_mixture(rng), random_mixture(rng)
        w = random_demixing(rng, 2, 5)
        np.testing.assert_allclose(
            core.demix(2.0 * x1 - 3.0 * x2, w),
            2.0 * core.demix(x1, w) - 3.0 * core.demix(x2, w),
            atol=1e-12,
        )

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(4)
        with pytest.raises(ValueError):
            core.demix(random_mixture(rng, n_src=3), random_demixing(rng, 2, 5))


class TestObjective:
    def test_zero_input_unit_variance(self):
        x = np.zeros((1, 1, 1), dtype=complex)
        w = np.ones((1, 1, 1), dtype=complex)
        v = np.ones((1, 1, 1))
        assert core.objective(x, w, v) == pytest.approx(0.0, abs=1e-15)

    def test_unit_case(self):
        x = np.ones((1, 1, 1), dtype=complex)
        w = np.ones((1, 1, 1), dtype=complex)
        v = np.ones((1, 1, 1))
        assert core.objective(x, w, v) == pytest.approx(1.0, rel=1e-12)

    def test_matches_scalar_loop(self):
        rng = np.random.default_rng(5)
        n_src, n_bins, n_frames = 3, 17, 32
        x = random_mixture(rng, n_src, n_bins, n_frames)
        w = random_demixing(rng, n_src, n_bins)
        v = rng.uniform(0.1, 2.0, size=(n_src, n_bins, n_frames))

        expected = 0.0
        for f in range(n_bins):
            for t in range(n_frames):
                y = w[f] @ x[:, f, t]
                for m in range(n_src):
                    expected += np.log(v[m, f, t]) + abs(y[m]) ** 2 / v[m, f, t]
        for f in range(n_bins):
            expected -= 2.0 * n_frames * np.log(abs(np.linalg.det(w[f])))

        got = core.objective(x, w, v)
        assert abs(got - expected) / abs(expected) < 1e-10


class TestSpatialCovariance:
    def test_rank_one_constant(self):
        x = np.zeros((2, 3, 4), dtype=complex)
        x[0] = 1.0  # constant e_1 across frames
        cov = core.compute_spatial_covariance(x, np.ones((3, 4)))
        for f in range(3):
            np.testing.assert_allclose(cov[f], np.outer([1, 0], [1, 0]), atol=1e-15)

    def test_homogeneity_in_variance(self):
        rng = np.random.default_rng(6)
        x = random_mixture(rng)
        base = core.compute_spatial_covariance(x, np.ones((5, 8)))
        scaled = core.compute_spatial_covariance(x, 4.0 * np.ones((5, 8)))
        np.testing.assert_allclose(scaled, base / 4.0, atol=1e-12)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(7)
        x = random_mixture(rng)
        r = rng.uniform(0.5, 2.0, size=(5, 8))
        cov = core.compute_spatial_covariance(x, r)
        for f in range(5):
            acc = np.zeros((2, 2), dtype=complex)
            for t in range(8):
                acc += np.outer(x[:, f, t], x[:, f, t].conj()) / r[f, t]
            np.testing.assert_allclose(cov[f], acc / 8.0, atol=1e-12)

    def test_hermitian(self):
        rng = np.random.default_rng(8)
        x = random_mixture(rng, 3)
        cov = core.compute_spatial_covariance(x, rng.uniform(0.5, 2.0, size=(5, 8)))
        np.testing.assert_allclose(cov, np.conj(cov.transpose(0, 2, 1)), atol=1e-12)


class TestIpUpdate:
    def test_scalar_case(self):
        # hand evaluation: (1*4)^-1 = 0.25, then 0.25/sqrt(0.25*4*0.25) = 0.5
        w = core.ip_update(np.array([[1.0 + 0j]]), np.array([[4.0 + 0j]]), 0)
        assert w[0] == pytest.approx(0.5)
        assert np.real(np.conj(w) @ np.array([[4.0]]) @ w) == pytest.approx(1.0)

    def test_identity_fixed_point(self):
        eye = np.eye(3, dtype=complex)
        for m in range(3):
            np.testing.assert_allclose(core.ip_update(eye, eye, m), eye[:, m], atol=1e-12)

    def test_normalization_postcondition(self):
        rng = np.random.default_rng(9)
        for _ in range(200):
            n = rng.integers(2, 4)
            cov = random_spd(rng, n)
            demix_f = random_demixing(rng, n, 1)[0]
            m = int(rng.integers(0, n))
            w = core.ip_update(demix_f, cov, m)
            assert np.real(np.conj(w) @ cov @ w) == pytest.approx(1.0, abs=1e-8)


class TestIpSweep:
    def test_never_increases_objective(self):
        rng = np.random.default_rng(10)
        for n_src in (2, 3):
            for trial in range(20):
                x = random_mixture(rng, n_src, n_bins=7, n_frames=24)
                w = random_demixing(rng, n_src, 7)
                v = rng.uniform(0.2, 3.0, size=(n_src, 7, 24))
                before = core.objective(x, w, v)
                after = core.objective(x, core.ip_sweep(x, w, v), v)
                assert after <= before + 1e-9 * abs(before)

    def test_matches_sequential_ip_update(self):
        # the vectorized sweep must equal the f-outer, m-inner loop
        rng = np.random.default_rng(11)
        x = random_mixture(rng, 2, n_bins=4, n_frames=16)
        w0 = random_demixing(rng, 2, 4)
        v = rng.uniform(0.2, 3.0, size=(2, 4, 16))
        swept = core.ip_sweep(x, w0, v)

        manual = w0.copy()
        for f in range(4):
            for m in range(2):
                cov = core.compute_spatial_covariance(x, v[m])[f]
                manual[f, m, :] = np.conj(core.ip_update(manual[f], cov, m))
        np.testing.assert_allclose(swept, manual, atol=1e-10)


class TestProjectionBack:
    def test_identity_keeps_reference_source(self):
        # with an identity system each "source" is one channel: the
        # reference channel's image is itself, the other channels have
        # no image at the reference microphone
        rng = np.random.default_rng(12)
        y = random_mixture(rng)
        w = np.tile(np.eye(2, dtype=complex), (5, 1, 1))
        out = core.projection_back(y, w, 0)
        np.testing.assert_allclose(out[0], y[0], atol=1e-15)
        np.testing.assert_allclose(out[1], 0.0 * y[1], atol=1e-15)

    def test_diagonal_inverse_scaling(self):
        rng = np.random.default_rng(13)
        y = random_mixture(rng)
        w = np.tile(np.diag([2.0 + 0j, 0.5 + 0j]), (5, 1, 1))
        out = core.projection_back(y, w, 0)
        np.testing.assert_allclose(out[0], 0.5 * y[0], atol=1e-12)
        # source 2 has no image at channel 1 for a diagonal system
        np.testing.assert_allclose(out[1], 0.0 * y[1], atol=1e-12)

    def test_reference_channel_1_diagonal(self):
        rng = np.random.default_rng(14)
        y = random_mixture(rng)
        w = np.tile(np.diag([2.0 + 0j, 0.5 + 0j]), (5, 1, 1))
        out = core.projection_back(y, w, 1)
        np.testing.assert_allclose(out[1], 2.0 * y[1], atol=1e-12)

    def test_recovers_reference_image(self):
        # demixing an unmixed single-source scene and projecting back
        # reproduces the source's image at the reference channel
        rng = np.random.default_rng(15)
        n_bins, n_frames = 6, 30
        source = rng.standard_normal((n_bins, n_frames)) + 1j * rng.standard_normal(
            (n_bins, n_frames)
        )
        mixing_vec = rng.standard_normal((n_bins, 2)) + 1j * rng.standard_normal((n_bins, 2))
        x = np.einsum("fm,ft->mft", mixing_vec, source)
        w = random_demixing(rng, 2, n_bins)
        y = core.demix(x, w)
        projected = core.projection_back(y, w, reference_channel=0)
        # the two projected sources must sum to the observation at mic 0
        np.testing.assert_allclose(projected.sum(axis=0), x[0], atol=1e-8)

    def test_singular_demixing_raises(self):
        y = np.zeros((2, 3, 4), dtype=complex)
        w = np.zeros((3, 2, 2), dtype=complex)
        with pytest.raises(core.DemixingError):
            core.projection_back(y, w, 0)
