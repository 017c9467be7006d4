"""Convolutive mixing with a controlled signal-to-interference ratio."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from ..audio import TimeSignal

__all__ = ["MixedScene", "mix", "mix_scene"]


@dataclass(frozen=True)
class MixedScene:
    """A mixture together with the per-source images that compose it."""

    mixture: TimeSignal
    # images[s] is source s convolved with its impulse responses (and
    # SIR-scaled), shape (n_mics, n_samples)
    images: np.ndarray
    gains: np.ndarray  # per-source scale actually applied
    reference_channel: int

    def reference_image(self, source: int) -> np.ndarray:
        return self.images[source, self.reference_channel]


def mix_scene(
    sources: list[TimeSignal],
    rirs: np.ndarray,
    target_sir_db: float,
    reference_channel: int = 0,
) -> MixedScene:
    """Convolve, balance and sum sources into a multichannel mixture.

    Source 0 is the target.  All interferer images share one gain chosen
    so that the target-to-interferer power ratio at the reference
    channel equals ``target_sir_db``; when the convolved images already
    sit at that ratio the gain is exactly one.

    Args:
        sources: two or more equal-rate mono signals.
        rirs: impulse responses, shape (n_sources, n_mics, taps).
        target_sir_db: desired ratio in dB.
        reference_channel: microphone at which the ratio is set.

    Returns:
        MixedScene with the mixture trimmed to the longest source length.
    """
    if len(sources) < 2:
        raise ValueError("need at least two sources to mix")
    if rirs.ndim != 3 or rirs.shape[0] != len(sources):
        raise ValueError(f"rir array {rirs.shape} does not cover {len(sources)} sources")
    rate = sources[0].sample_rate
    if any(s.sample_rate != rate for s in sources):
        raise ValueError("sources must share one sample rate")

    n_mics = rirs.shape[1]
    n_out = max(s.n_samples for s in sources)
    images = np.zeros((len(sources), n_mics, n_out))
    for si, source in enumerate(sources):
        mono = source.mono()
        for mi in range(n_mics):
            conv = fftconvolve(mono, rirs[si, mi])
            images[si, mi] = conv[:n_out] if conv.shape[0] >= n_out else np.pad(
                conv, (0, n_out - conv.shape[0])
            )

    powers = np.mean(images[:, reference_channel, :] ** 2, axis=1)
    if np.any(powers <= 0):
        silent = int(np.flatnonzero(powers <= 0)[0])
        raise ValueError(f"source {silent} has zero power at the reference channel")
    interferer_power = powers[1:].sum()
    gain = np.sqrt(powers[0] * 10.0 ** (-target_sir_db / 10.0) / interferer_power)
    gains = np.concatenate([[1.0], np.full(len(sources) - 1, gain)])
    images *= gains[:, None, None]
    mixture = TimeSignal(images.sum(axis=0), rate)
    return MixedScene(mixture, images, gains, reference_channel)


def mix(
    sources: list[TimeSignal],
    rirs: np.ndarray,
    target_sir_db: float,
    reference_channel: int = 0,
) -> TimeSignal:
    """Multichannel mixture at the requested signal-to-interference ratio."""
    return mix_scene(sources, rirs, target_sir_db, reference_channel).mixture
