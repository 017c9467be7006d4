"""Fixed-length speaker embeddings from a time-delay network."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn.container import ContainerError, WeightContainer
from ..nn.network import SequentialNet, net_from_container
from .features import MfccFrames

__all__ = ["Embedding", "EmbedderWeights", "embed", "length_normalize"]

WINDOW_FRAMES = 180
WINDOW_SHIFT = 90


@dataclass(frozen=True)
class Embedding:
    """An embedding vector and the processing stage it has reached."""

    vector: np.ndarray
    stage: str = "raw"  # raw | lda | normalized

    def __post_init__(self) -> None:
        vector = np.asarray(self.vector, dtype=np.float64)
        if vector.ndim != 1:
            raise ValueError("embedding must be a vector")
        if self.stage not in ("raw", "lda", "normalized"):
            raise ValueError(f"unknown stage {self.stage!r}")
        if self.stage == "normalized" and not np.isclose(np.linalg.norm(vector), 1.0):
            raise ValueError("normalized embedding must have unit norm")
        object.__setattr__(self, "vector", vector)


@dataclass(frozen=True)
class EmbedderWeights:
    """Frame-level network with statistics pooling and an affine head."""

    net: SequentialNet
    input_dim: int
    embedding_dim: int

    @classmethod
    def from_container(cls, container: WeightContainer) -> "EmbedderWeights":
        if container.kind != "tdnn-embedder":
            raise ContainerError(f"expected a tdnn-embedder container, got {container.kind!r}")
        input_dim = int(container.meta["input_dim"])
        embedding_dim = int(container.meta["embedding_dim"])
        net = net_from_container(container, input_dim)
        if net.output_channels != embedding_dim:
            raise ContainerError("embedder head does not match the declared embedding size")
        return cls(net, input_dim, embedding_dim)

    @property
    def minimum_frames(self) -> int:
        """Shortest input the layer contexts can consume."""
        frames = 1
        # walk backwards: each valid convolution consumes dilation*(kernel-1)
        for layer in reversed(self.net.layers):
            spec = layer.spec
            if spec.kind == "convolution-1d":
                frames = (frames - 1) * spec.stride + spec.dilation * (spec.kernel - 1) + 1
        return frames


def embed(frames: MfccFrames, weights: EmbedderWeights) -> Embedding:
    """Average of per-window network outputs.

    Windows are 180 frames starting every 90 frames; an utterance
    shorter than one window is processed as a single window.  The
    network output of each window (an affine embedding after statistics
    pooling) is averaged into the final raw embedding.
    """
    feats = frames.values
    if feats.shape[0] != weights.input_dim:
        raise ContainerError(
            f"embedder expects {weights.input_dim}-dim features, got {feats.shape[0]}"
        )
    n = feats.shape[1]
    if n < weights.minimum_frames:
        raise ValueError(
            f"utterance of {n} frames is shorter than the network context "
            f"({weights.minimum_frames} frames)"
        )
    if n < WINDOW_FRAMES:
        starts = [0]
        width = n
    else:
        starts = list(range(0, n - WINDOW_FRAMES + 1, WINDOW_SHIFT))
        width = WINDOW_FRAMES
    vectors = [weights.net.forward(feats[:, s : s + width])[:, 0] for s in starts]
    return Embedding(np.mean(vectors, axis=0), "raw")


def length_normalize(embedding: Embedding) -> Embedding:
    """Scale to unit L2 norm."""
    norm = float(np.linalg.norm(embedding.vector))
    if norm <= 0:
        raise ValueError("cannot normalize a zero embedding")
    return Embedding(embedding.vector / norm, "normalized")
