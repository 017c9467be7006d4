"""Complete selection backend: feature chain, projection and scoring.

Bundles the embedding network's downstream models (discriminant
projection plus the probabilistic scorer) and the end-to-end chain from
audio to a scored embedding.  Serialized in the shared weight-container
format under the ``speaker-backend`` kind tag.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..audio import TimeSignal
from ..nn.container import ContainerError, WeightContainer, read_container, write_container
from .embed import EmbedderWeights, Embedding, embed, length_normalize
from .features import apply_sample_mask, energy_vad, mfcc
from .lda import LdaModel, lda_fit, lda_project
from .plda import PldaModel, plda_fit

__all__ = ["SpeakerBackend", "fit_backend", "save_backend", "load_backend", "utterance_embedding"]


@dataclass(frozen=True)
class SpeakerBackend:
    """Projection and scoring models applied after raw embedding."""

    lda: LdaModel
    plda: PldaModel

    def prepare(self, raw: Embedding) -> Embedding:
        """Project a raw embedding and length-normalize it."""
        projected = Embedding(lda_project(self.lda, raw.vector), "lda")
        return length_normalize(projected)


def utterance_embedding(
    signal: TimeSignal, weights: EmbedderWeights, use_vad: bool = True
) -> Embedding:
    """Raw embedding of an utterance: VAD, normalized MFCCs, network."""
    mono = signal if signal.n_channels == 1 else signal.channel(0)
    if use_vad:
        mask = energy_vad(mono)
        if np.any(mask):
            mono = apply_sample_mask(mono, mask)
    features = mfcc(mono, normalize=True)
    return embed(features, weights)


def fit_backend(
    embeddings: np.ndarray,
    labels,
    lda_dim: int = 128,
    em_iterations: int = 20,
) -> SpeakerBackend:
    """Fit projection and scorer on raw training embeddings."""
    lda = lda_fit(embeddings, labels, target_dim=lda_dim)
    projected = lda_project(lda, embeddings)
    norms = np.linalg.norm(projected, axis=1, keepdims=True)
    normalized = projected / np.maximum(norms, 1e-12)
    plda = plda_fit(normalized, labels, em_iterations=em_iterations)
    return SpeakerBackend(lda, plda)


def save_backend(path: str | Path, backend: SpeakerBackend) -> None:
    container = WeightContainer(
        kind="speaker-backend",
        layers=[],
        meta={
            "input_dim": int(backend.lda.mean.shape[0]),
            "output_dim": int(backend.lda.output_dim),
        },
        tensors={
            "lda.mean": backend.lda.mean,
            "lda.projection": backend.lda.projection,
            "lda.eigenvalues": backend.lda.eigenvalues,
            "plda.mean": backend.plda.mean,
            "plda.between": backend.plda.between,
            "plda.within": backend.plda.within,
        },
    )
    write_container(path, container)


def load_backend(path: str | Path) -> SpeakerBackend:
    container = read_container(path)
    if container.kind != "speaker-backend":
        raise ContainerError(f"expected a speaker-backend container, got {container.kind!r}")
    lda = LdaModel(
        container.tensor("lda.mean"),
        container.tensor("lda.projection"),
        container.tensor("lda.eigenvalues"),
    )
    # float32 storage slightly breaks symmetry; restore it explicitly
    between = container.tensor("plda.between")
    within = container.tensor("plda.within")
    plda = PldaModel(
        container.tensor("plda.mean"),
        0.5 * (between + between.T),
        0.5 * (within + within.T),
    )
    return SpeakerBackend(lda, plda)
