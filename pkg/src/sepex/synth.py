"""Parametric synthetic voices for fixtures and desk-scale corpora.

Each voice is a small set of "phoneme" spectral envelopes plus a pitch
range drawn from a per-speaker stream.  Utterances are random phoneme
sequences rendered as filtered harmonic excitation and shaped noise
with a syllabic amplitude contour, which gives speech-like low-rank
spectrograms and stable per-speaker long-term statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from .audio import TimeSignal, write_wav
from .rng import substream

__all__ = ["SyntheticVoice", "synthetic_voice", "utterance", "build_pool"]

_FIR_ORDER = 256


@dataclass(frozen=True)
class SyntheticVoice:
    """Sampled voice parameters for one synthetic speaker."""

    speaker_id: str
    f0_hz: float
    phoneme_filters: np.ndarray  # (n_phonemes, fir taps)
    phoneme_voicing: np.ndarray  # (n_phonemes,) in [0, 1]
    syllable_rate_hz: float


def _smooth_envelope(rng: np.random.Generator, n_bins: int, bumps: int) -> np.ndarray:
    """Random smooth log-magnitude envelope over frequency bins."""
    centers = rng.uniform(0.05, 0.95, size=bumps) * n_bins
    widths = rng.uniform(0.02, 0.12, size=bumps) * n_bins
    heights = rng.uniform(1.0, 3.0, size=bumps)
    grid = np.arange(n_bins)
    log_mag = np.full(n_bins, -4.0)
    for c, w, h in zip(centers, widths, heights):
        log_mag = np.logaddexp(log_mag, h - 0.5 * ((grid - c) / w) ** 2)
    tilt = rng.uniform(-2.0, -0.5)
    log_mag += tilt * grid / n_bins
    return np.exp(log_mag)


def synthetic_voice(speaker_id: str, seed: int, n_phonemes: int = 10) -> SyntheticVoice:
    """Deterministic voice for (speaker_id, seed)."""
    rng = substream(seed, f"voice:{speaker_id}")
    n_bins = _FIR_ORDER // 2 + 1
    filters = []
    for _ in range(n_phonemes):
        magnitude = _smooth_envelope(rng, n_bins, bumps=rng.integers(2, 5))
        fir = np.fft.irfft(magnitude, n=_FIR_ORDER)
        fir = np.roll(fir, _FIR_ORDER // 2) * np.hanning(_FIR_ORDER)
        filters.append(fir)
    return SyntheticVoice(
        speaker_id=speaker_id,
        f0_hz=float(rng.uniform(95.0, 280.0)),
        phoneme_filters=np.array(filters),
        phoneme_voicing=rng.uniform(0.2, 1.0, size=n_phonemes),
        syllable_rate_hz=float(rng.uniform(2.5, 5.0)),
    )


def utterance(
    voice: SyntheticVoice,
    duration: float,
    seed: int,
    sample_rate: int = 16000,
) -> TimeSignal:
    """Render one utterance of the voice; deterministic given the seed."""
    rng = substream(seed, f"utt:{voice.speaker_id}")
    n = int(round(duration * sample_rate))
    if n <= 0:
        raise ValueError("duration must be positive")

    # pitch contour: slow random walk around the speaker's base f0
    drift = np.cumsum(rng.normal(0.0, 0.3, size=n)) / np.sqrt(np.arange(1, n + 1))
    f0 = voice.f0_hz * (1.0 + 0.08 * drift / max(np.abs(drift).max(), 1.0))
    phase = 2.0 * np.pi * np.cumsum(f0) / sample_rate
    pulses = np.zeros(n)
    for harmonic in range(1, 9):
        pulses += np.sin(harmonic * phase) / harmonic
    noise = rng.normal(0.0, 1.0, size=n)

    # phoneme segmentation: 80-250 ms segments with wideband per-segment
    # gains, so all frequencies of a source co-modulate as in speech
    out = np.zeros(n + _FIR_ORDER)
    start = 0
    while start < n:
        seg_len = int(rng.uniform(0.08, 0.25) * sample_rate)
        stop = min(start + seg_len, n)
        idx = int(rng.integers(0, voice.phoneme_filters.shape[0]))
        voicing = voice.phoneme_voicing[idx]
        segment = voicing * pulses[start:stop] + (1.0 - voicing) * noise[start:stop]
        segment *= 10.0 ** (rng.uniform(-8.0, 0.0) / 20.0)
        ramp = min(160, max(1, (stop - start) // 4))
        fade = np.ones(stop - start)
        fade[:ramp] = np.linspace(0.0, 1.0, ramp)
        fade[-ramp:] *= np.linspace(1.0, 0.0, ramp)
        shaped = fftconvolve(segment * fade, voice.phoneme_filters[idx])
        out[start : start + shaped.shape[0]] += shaped
        start = stop
    out = out[:n]

    # syllabic energy contour with speech-depth swings and short pauses
    t = np.arange(n) / sample_rate
    wobble = np.sin(2.0 * np.pi * voice.syllable_rate_hz * t + rng.uniform(0, 2 * np.pi))
    envelope = 0.03 + 0.97 * (0.5 * (1.0 + wobble)) ** 2
    envelope *= 1.0 + 0.25 * np.sin(2.0 * np.pi * 0.31 * t + rng.uniform(0, 2 * np.pi))
    out *= envelope

    rms = np.sqrt(np.mean(out**2))
    if rms <= 0:
        raise RuntimeError("synthetic utterance rendered silent")
    return TimeSignal(0.1 * out / rms, sample_rate)


def build_pool(
    out_dir: str | Path,
    n_speakers: int,
    utterances_per_speaker: int,
    duration: float,
    seed: int,
    sample_rate: int = 16000,
) -> dict[str, list[Path]]:
    """Write a WAV pool ``<out_dir>/<speaker>/<utt>.wav`` and index it."""
    out_dir = Path(out_dir)
    pool: dict[str, list[Path]] = {}
    for s in range(n_speakers):
        speaker = f"spk{s:03d}"
        voice = synthetic_voice(speaker, seed)
        speaker_dir = out_dir / speaker
        speaker_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for u in range(utterances_per_speaker):
            sig = utterance(voice, duration, seed=seed * 100_003 + s * 1_009 + u, sample_rate=sample_rate)
            path = speaker_dir / f"utt{u:03d}.wav"
            write_wav(path, sig)
            paths.append(path)
        pool[speaker] = paths
    return pool
