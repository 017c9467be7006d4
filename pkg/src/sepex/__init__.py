"""Determined blind source separation and target-speaker extraction.

A numpy toolkit built around a shared local-Gaussian separation engine:
rank-K variance models or a trained decoder network drive
iterative-projection demixing updates; an image-method room simulator
produces evaluation scenes; a speaker-embedding backend picks the
target source from the separated channels.
"""

from . import audio, bss, metrics, nn, rng, sim, speaker, stft, synth
from .audio import TimeSignal, read_wav, write_wav
from .stft import SpectrogramTensor, analyze, synthesize

__version__ = "0.1.0"

__all__ = [
    "audio",
    "bss",
    "metrics",
    "nn",
    "rng",
    "sim",
    "speaker",
    "stft",
    "synth",
    "TimeSignal",
    "read_wav",
    "write_wav",
    "SpectrogramTensor",
    "analyze",
    "synthesize",
    "__version__",
]
