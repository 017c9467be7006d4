"""STFT analysis and weighted overlap-add synthesis.

A square-root Hann window is used on both the analysis and synthesis
side.  At the default 75% overlap the squared window tiles the time
axis exactly, so analyze -> synthesize reconstructs interior samples to
machine precision.  The tail of the input is zero-padded to a whole
number of frames; edge samples (the first and last ``window - hop``)
are only partially windowed and are excluded from reconstruction
guarantees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .audio import TimeSignal

__all__ = ["SpectrogramTensor", "analyze", "synthesize"]

# Overlap-add normalization floor, relative to the interior window sum.
# Edge samples whose coverage falls below this are muted rather than
# divided by a vanishing weight: after per-bin processing the frames are
# no longer consistent, and dividing inconsistencies by ~1e-11 coverage
# would inject huge clicks at the signal boundaries.
_WSUM_REL_FLOOR = 1e-3


@dataclass(frozen=True)
class SpectrogramTensor:
    """Complex STFT coefficients with their framing metadata.

    values has shape (n_channels, n_bins, n_frames) with
    n_bins = window_length // 2 + 1 (one-sided spectrum).
    """

    values: np.ndarray
    window_length: int
    hop: int
    sample_rate: int

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.complex128)
        if values.ndim != 3:
            raise ValueError("values must have shape (channels, bins, frames)")
        if values.shape[1] != self.window_length // 2 + 1:
            raise ValueError(
                f"bin count {values.shape[1]} inconsistent with window "
                f"length {self.window_length}"
            )
        if self.window_length % self.hop != 0:
            raise ValueError("hop must divide window_length")
        if not np.all(np.isfinite(values)):
            raise ValueError("spectrogram contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    @property
    def n_bins(self) -> int:
        return self.values.shape[1]

    @property
    def n_frames(self) -> int:
        return self.values.shape[2]

    def with_values(self, values: np.ndarray) -> "SpectrogramTensor":
        """Same framing metadata around new coefficient values."""
        return SpectrogramTensor(values, self.window_length, self.hop, self.sample_rate)


def sqrt_hann(window_length: int) -> np.ndarray:
    """Square root of the periodic Hann window."""
    n = np.arange(window_length)
    return np.sqrt(0.5 * (1.0 - np.cos(2.0 * np.pi * n / window_length)))


def analyze(signal: TimeSignal, window_length: int = 1024, hop: int | None = None) -> SpectrogramTensor:
    """Short-time Fourier transform of a multichannel signal.

    Args:
        signal: input audio, at least ``window_length`` samples long.
        window_length: frame size in samples; must be a power of two.
        hop: frame advance in samples; defaults to ``window_length // 4``
            (75% overlap) and must divide ``window_length``.

    Returns:
        SpectrogramTensor of shape (channels, window_length // 2 + 1, frames)
        where the frame count covers the zero-padded tail.
    """
    if hop is None:
        hop = window_length // 4
    if window_length <= 0 or (window_length & (window_length - 1)) != 0:
        raise ValueError("window_length must be a positive power of two")
    if hop <= 0 or window_length % hop != 0:
        raise ValueError("hop must divide window_length")
    x = signal.samples
    n = x.shape[1]
    if n < window_length:
        raise ValueError(f"signal length {n} shorter than window {window_length}")

    n_frames = int(np.ceil((n - window_length) / hop)) + 1
    padded = window_length + (n_frames - 1) * hop
    if padded > n:
        x = np.pad(x, ((0, 0), (0, padded - n)))

    window = sqrt_hann(window_length)
    frames = sliding_window_view(x, window_length, axis=1)[:, ::hop, :]
    spec = np.fft.rfft(frames * window, axis=-1)
    return SpectrogramTensor(spec.transpose(0, 2, 1), window_length, hop, signal.sample_rate)


def synthesize(spec: SpectrogramTensor, length: int | None = None) -> TimeSignal:
    """Weighted overlap-add inverse of :func:`analyze`.

    Args:
        spec: spectrogram produced by :func:`analyze`.
        length: optional output length in samples; the natural length
            ``(frames - 1) * hop + window_length`` is trimmed or padded.

    Returns:
        Reconstructed time signal.  Interior samples (at least one full
        window away from each end) match the analyzed signal exactly.
    """
    window_length, hop = spec.window_length, spec.hop
    window = sqrt_hann(window_length)
    n_frames = spec.n_frames
    total = (n_frames - 1) * hop + window_length

    frames = np.fft.irfft(spec.values.transpose(0, 2, 1), n=window_length, axis=-1)
    frames *= window

    out = np.zeros((spec.n_channels, total))
    wsum = np.zeros(total)
    for t in range(n_frames):
        start = t * hop
        out[:, start : start + window_length] += frames[:, t, :]
        wsum[start : start + window_length] += window**2
    covered = wsum > _WSUM_REL_FLOOR * wsum.max()
    out[:, covered] /= wsum[covered]
    out[:, ~covered] = 0.0

    if length is not None:
        if length <= total:
            out = out[:, :length]
        else:
            out = np.pad(out, ((0, 0), (0, length - total)))
    return TimeSignal(out, spec.sample_rate)
