"""Time-domain signal container and WAV file I/O."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

__all__ = ["TimeSignal", "read_wav", "write_wav"]


@dataclass(frozen=True)
class TimeSignal:
    """Multichannel audio with its sample rate.

    Samples are stored as float64 with shape (n_channels, n_samples);
    1-d input is promoted to a single channel.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[np.newaxis, :]
        if samples.ndim != 2:
            raise ValueError("samples must be 1-d or 2-d (channels, samples)")
        if samples.shape[1] == 0:
            raise ValueError("signal is empty")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite values")
        object.__setattr__(self, "samples", samples)

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    def channel(self, m: int) -> "TimeSignal":
        """Single channel m as a new mono signal."""
        return TimeSignal(self.samples[m].copy(), self.sample_rate)

    def mono(self) -> np.ndarray:
        """First channel as a flat array (requires a mono signal)."""
        if self.n_channels != 1:
            raise ValueError(f"expected mono signal, got {self.n_channels} channels")
        return self.samples[0]


def read_wav(path: str | Path) -> TimeSignal:
    """Read a PCM16/PCM32/float WAV file, scaling integers to [-1, 1)."""
    rate, data = wavfile.read(str(path))
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        data = data.astype(np.float64) / 2147483648.0
    else:
        data = data.astype(np.float64)
    if data.ndim == 2:  # scipy stores (n_samples, n_channels)
        data = data.T
    return TimeSignal(data, int(rate))


def write_wav(path: str | Path, signal: TimeSignal, encoding: str = "float32") -> None:
    """Write a WAV file as little-endian 32-bit float or 16-bit PCM."""
    data = signal.samples.T
    if data.shape[1] == 1:
        data = data[:, 0]
    if encoding == "float32":
        wavfile.write(str(path), signal.sample_rate, data.astype(np.float32))
    elif encoding == "pcm16":
        clipped = np.clip(data, -1.0, 32767.0 / 32768.0)
        wavfile.write(str(path), signal.sample_rate, np.round(clipped * 32768.0).astype(np.int16))
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
