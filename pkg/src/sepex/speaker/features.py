"""Cepstral features and energy-based voice activity detection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.fft import dct

from ..audio import TimeSignal

__all__ = ["MfccFrames", "mfcc", "mel_filterbank", "energy_vad", "apply_sample_mask"]

N_COEFFICIENTS = 30
FRAME_SECONDS = 0.064
HOP_SECONDS = 0.016
N_MEL_FILTERS = 40
MEL_BAND_HZ = (20.0, 7600.0)
PREEMPHASIS = 0.97
LOG_FLOOR = 1e-10

VAD_FRAME_SECONDS = 0.025
VAD_HOP_SECONDS = 0.010
VAD_THRESHOLD_DB = 30.0
VAD_PERCENTILE = 95.0


@dataclass(frozen=True)
class MfccFrames:
    """Matrix of cepstral coefficients, shape (n_coefficients, n_frames)."""

    values: np.ndarray
    frame_length: int
    hop: int
    sample_rate: int
    normalized: bool = False

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("values must be (coefficients, frames)")
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite feature values")
        object.__setattr__(self, "values", values)

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]

    def mean_variance_normalized(self) -> "MfccFrames":
        """Per-utterance zero-mean unit-variance coefficients."""
        mean = self.values.mean(axis=1, keepdims=True)
        std = self.values.std(axis=1, keepdims=True)
        values = (self.values - mean) / np.maximum(std, 1e-10)
        return MfccFrames(values, self.frame_length, self.hop, self.sample_rate, True)


def _hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)


def _mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)


def mel_filterbank(n_filters: int, n_fft: int, sample_rate: int, band_hz=MEL_BAND_HZ) -> np.ndarray:
    """Triangular filters on the mel scale, shape (n_filters, n_fft//2 + 1)."""
    low, high = _hz_to_mel(band_hz[0]), _hz_to_mel(band_hz[1])
    edges_hz = _mel_to_hz(np.linspace(low, high, n_filters + 2))
    bins = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)
    bank = np.zeros((n_filters, bins.shape[0]))
    for i in range(n_filters):
        left, center, right = edges_hz[i], edges_hz[i + 1], edges_hz[i + 2]
        rising = (bins - left) / (center - left)
        falling = (right - bins) / (right - center)
        bank[i] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


def mfcc(signal: TimeSignal, normalize: bool = False) -> MfccFrames:
    """30-dimensional MFCCs with 64 ms frames and a 16 ms hop.

    Per frame: pre-emphasis (0.97), Hann window, power spectrum, 40
    triangular mel filters over 20-7600 Hz, log, and an orthonormal
    DCT-II keeping coefficients 0..29.

    Args:
        signal: mono audio at 16 kHz.
        normalize: apply per-utterance mean/variance normalization.
    """
    if signal.sample_rate != 16000:
        raise ValueError("features are defined for 16 kHz input")
    x = signal.mono()
    frame_length = int(round(FRAME_SECONDS * signal.sample_rate))
    hop = int(round(HOP_SECONDS * signal.sample_rate))
    if x.shape[0] < frame_length:
        raise ValueError(f"signal of {x.shape[0]} samples shorter than one frame")

    emphasized = np.empty_like(x)
    emphasized[0] = x[0] - PREEMPHASIS * x[0]
    emphasized[1:] = x[1:] - PREEMPHASIS * x[:-1]

    frames = sliding_window_view(emphasized, frame_length)[::hop]
    window = np.hanning(frame_length)
    power = np.abs(np.fft.rfft(frames * window, axis=1)) ** 2
    bank = mel_filterbank(N_MEL_FILTERS, frame_length, signal.sample_rate)
    logmel = np.log(np.maximum(power @ bank.T, LOG_FLOOR))
    coeffs = dct(logmel, type=2, norm="ortho", axis=1)[:, :N_COEFFICIENTS]
    frames_out = MfccFrames(coeffs.T, frame_length, hop, signal.sample_rate)
    return frames_out.mean_variance_normalized() if normalize else frames_out


def energy_vad(signal: TimeSignal) -> np.ndarray:
    """Boolean keep-mask over samples from frame energies.

    Frames of 25 ms with a 10 ms hop are kept when their energy is
    within 30 dB of the 95th-percentile frame energy; the frame decision
    is expanded back to samples (a sample is kept when any frame
    covering it is kept).  An all-silent input yields an all-False mask.
    """
    x = signal.mono()
    frame = int(round(VAD_FRAME_SECONDS * signal.sample_rate))
    hop = int(round(VAD_HOP_SECONDS * signal.sample_rate))
    n = x.shape[0]
    if n < frame:
        raise ValueError("signal shorter than one detector frame")
    frames = sliding_window_view(x, frame)[::hop]
    energies = np.sum(frames**2, axis=1)
    peak = np.percentile(energies, VAD_PERCENTILE)
    if peak <= 0:
        return np.zeros(n, dtype=bool)
    keep_frames = energies >= peak * 10.0 ** (-VAD_THRESHOLD_DB / 10.0)
    mask = np.zeros(n, dtype=bool)
    for i in np.flatnonzero(keep_frames):
        mask[i * hop : i * hop + frame] = True
    # tail samples past the last full frame follow the last frame's decision
    last_end = (frames.shape[0] - 1) * hop + frame
    if last_end < n and keep_frames.size and keep_frames[-1]:
        mask[last_end:] = True
    return mask


def apply_sample_mask(signal: TimeSignal, mask: np.ndarray) -> TimeSignal:
    """Concatenate the kept samples of a mono signal."""
    x = signal.mono()
    if mask.shape != x.shape:
        raise ValueError("mask length does not match the signal")
    if not np.any(mask):
        raise ValueError("mask keeps no samples")
    return TimeSignal(x[mask], signal.sample_rate)
