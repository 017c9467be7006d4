import numpy as np
import pytest

from sepex.audio import TimeSignal
from sepex.stft import SpectrogramTensor, analyze, sqrt_hann, synthesize


def random_signal(rng, seconds=1.0, channels=1, rate=16000):
    return TimeSignal(rng.standard_normal((channels, int(seconds * rate))), rate)


class TestAnalyze:
    def test_zero_signal_zero_tensor(self):
        sig = TimeSignal(np.zeros(16000), 16000)
        spec = analyze(sig, window_length=1024)
        assert spec.n_bins == 513
        assert np.all(spec.values == 0)

    def test_sine_peak_bin(self):
        # 1 kHz at 16 kHz with a 1024 window lands on bin 64
        t = np.arange(16000) / 16000.0
        spec = analyze(TimeSignal(np.sin(2 * np.pi * 1000.0 * t), 16000), 1024)
        magnitudes = np.abs(spec.values[0]).mean(axis=1)
        assert np.argmax(magnitudes) == 64

    def test_single_frame_matches_direct_dft(self):
        # oracle: explicit DFT sum of the windowed first frame
        rng = np.random.default_rng(7)
        x = rng.standard_normal(1024)
        spec = analyze(TimeSignal(x, 16000), window_length=1024, hop=256)
        windowed = x * sqrt_hann(1024)
        n = np.arange(1024)
        oracle = np.array(
            [np.sum(windowed * np.exp(-2j * np.pi * k * n / 1024)) for k in range(513)]
        )
        np.testing.assert_allclose(spec.values[0, :, 0], oracle, atol=1e-9)

    @staticmethod
    def _spectral_energy(spec, window, hop):
        # two-sided energy from the one-sided spectrum, scaled by the
        # hop / window-energy factor
        two_sided = 2.0 * np.sum(np.abs(spec) ** 2) - np.sum(np.abs(spec[0]) ** 2) - np.sum(
            np.abs(spec[-1]) ** 2
        )
        win_sq_per_sample = np.sum(sqrt_hann(window) ** 2) / hop  # = 2 at 75% overlap
        return two_sided / (window * win_sq_per_sample)

    def test_parseval_against_direct_summation(self):
        # oracle: sum the squared windowed samples directly
        rng = np.random.default_rng(11)
        x = rng.standard_normal(16000)
        window, hop = 1024, 256
        spec = analyze(TimeSignal(x, 16000), window, hop).values[0]
        estimate = self._spectral_energy(spec, window, hop)
        coverage = np.zeros(window + (spec.shape[1] - 1) * hop)
        w_sq = sqrt_hann(window) ** 2
        for t in range(spec.shape[1]):
            coverage[t * hop : t * hop + window] += w_sq
        direct = np.sum(x**2 * coverage[:16000]) / 2.0
        assert abs(estimate - direct) / direct < 1e-12

    def test_parseval_approximates_signal_energy(self):
        # edges carry partial window coverage, so use a signal long
        # enough for them to stay below the 1% budget
        rng = np.random.default_rng(13)
        x = rng.standard_normal(16000 * 10)
        window, hop = 1024, 256
        spec = analyze(TimeSignal(x, 16000), window, hop).values[0]
        estimate = self._spectral_energy(spec, window, hop)
        energy = np.sum(x**2)
        assert abs(estimate - energy) / energy < 0.01

    def test_linearity(self):
        rng = np.random.default_rng(3)
        x = random_signal(rng)
        y = random_signal(rng)
        a, b = 0.7, -2.3
        combined = TimeSignal(a * x.samples + b * y.samples, 16000)
        lhs = analyze(combined, 512).values
        rhs = a * analyze(x, 512).values + b * analyze(y, 512).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_frame_count_formula(self):
        # tail is zero-padded into a final partial frame
        sig = TimeSignal(np.ones(16000), 16000)
        spec = analyze(sig, 1024, 256)
        assert spec.n_frames == int(np.ceil((16000 - 1024) / 256)) + 1

    def test_rejects_bad_hop(self):
        sig = TimeSignal(np.ones(4096), 16000)
        with pytest.raises(ValueError):
            analyze(sig, 1024, hop=300)

    def test_rejects_short_signal(self):
        with pytest.raises(ValueError):
            analyze(TimeSignal(np.ones(100), 16000), 1024)

    def test_rejects_empty_signal(self):
        with pytest.raises(ValueError):
            TimeSignal(np.zeros(0), 16000)


class TestSynthesize:
    def test_round_trip_interior(self):
        rng = np.random.default_rng(17)
        for channels in (1, 2):
            sig = random_signal(rng, seconds=1.0, channels=channels)
            spec = analyze(sig, 1024)
            rec = synthesize(spec, length=sig.n_samples)
            interior = slice(1024, sig.n_samples - 1024)
            err = np.linalg.norm(rec.samples[:, interior] - sig.samples[:, interior])
            assert err / np.linalg.norm(sig.samples[:, interior]) < 1e-10

    def test_zero_tensor_gives_zero_signal(self):
        spec = SpectrogramTensor(np.zeros((1, 513, 20), dtype=complex), 1024, 256, 16000)
        rec = synthesize(spec)
        assert np.all(rec.samples == 0)

    def test_linear_scaling(self):
        rng = np.random.default_rng(23)
        sig = random_signal(rng)
        spec = analyze(sig, 1024)
        doubled = synthesize(spec.with_values(2.0 * spec.values), length=sig.n_samples)
        base = synthesize(spec, length=sig.n_samples)
        np.testing.assert_allclose(doubled.samples, 2.0 * base.samples, atol=1e-12)

    def test_rejects_inconsistent_metadata(self):
        with pytest.raises(ValueError):
            SpectrogramTensor(np.zeros((1, 513, 4), dtype=complex), 1024, 300, 16000)
        with pytest.raises(ValueError):
            SpectrogramTensor(np.zeros((1, 512, 4), dtype=complex), 1024, 256, 16000)
