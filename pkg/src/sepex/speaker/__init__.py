from .backend import (
    SpeakerBackend,
    fit_backend,
    load_backend,
    save_backend,
    utterance_embedding,
)
from .embed import EmbedderWeights, Embedding, embed, length_normalize
from .features import MfccFrames, apply_sample_mask, energy_vad, mel_filterbank, mfcc
from .lda import LdaModel, lda_fit, lda_project
from .plda import PldaModel, plda_fit, plda_score
from .select import select_target

__all__ = [
    "SpeakerBackend",
    "fit_backend",
    "load_backend",
    "save_backend",
    "utterance_embedding",
    "EmbedderWeights",
    "Embedding",
    "embed",
    "length_normalize",
    "MfccFrames",
    "apply_sample_mask",
    "energy_vad",
    "mel_filterbank",
    "mfcc",
    "LdaModel",
    "lda_fit",
    "lda_project",
    "PldaModel",
    "plda_fit",
    "plda_score",
    "select_target",
]
