from . import core
from .core import DemixingError, demix, ip_sweep, ip_update, objective, projection_back
from .ilrma import IlrmaResult, NmfModel, nmf_update, nmf_variance, run_ilrma
from .mvae import (
    DecoderWeights,
    EncoderWeights,
    MvaeResult,
    NeuralSourceState,
    decoder_backward,
    decoder_forward,
    run_mvae,
    update_latents,
    update_scale,
)

__all__ = [
    "core",
    "DemixingError",
    "demix",
    "ip_sweep",
    "ip_update",
    "objective",
    "projection_back",
    "IlrmaResult",
    "NmfModel",
    "nmf_update",
    "nmf_variance",
    "run_ilrma",
    "DecoderWeights",
    "EncoderWeights",
    "MvaeResult",
    "NeuralSourceState",
    "decoder_backward",
    "decoder_forward",
    "run_mvae",
    "update_latents",
    "update_scale",
]
