"""Linear discriminant projection for embedding compression."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

__all__ = ["LdaModel", "lda_fit", "lda_project"]


@dataclass(frozen=True)
class LdaModel:
    """Centering mean and discriminant projection (rows are components)."""

    mean: np.ndarray
    projection: np.ndarray
    eigenvalues: np.ndarray

    @property
    def output_dim(self) -> int:
        return self.projection.shape[0]


def _scatter_matrices(x: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = x.mean(axis=0)
    classes = np.unique(labels)
    dim = x.shape[1]
    within = np.zeros((dim, dim))
    between = np.zeros((dim, dim))
    for cls in classes:
        members = x[labels == cls]
        cls_mean = members.mean(axis=0)
        centered = members - cls_mean
        within += centered.T @ centered
        offset = (cls_mean - mean)[:, None]
        between += members.shape[0] * (offset @ offset.T)
    return mean, within / x.shape[0], between / x.shape[0]


def lda_fit(embeddings: np.ndarray, labels, target_dim: int = 128, ridge: float = 1e-6) -> LdaModel:
    """Fit a discriminant projection to labeled embeddings.

    Solves the generalized eigenproblem of the between- and within-class
    scatter and keeps the ``min(target_dim, n_classes - 1, dim)`` leading
    components.  A singular within-class scatter is regularized with a
    trace-scaled ridge.

    Args:
        embeddings: array (n_samples, dim).
        labels: per-sample class labels (at least two classes, and two
            samples in some class).
    """
    x = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] != labels.shape[0]:
        raise ValueError("embeddings (n, d) and labels (n,) required")
    classes, counts = np.unique(labels, return_counts=True)
    if classes.shape[0] < 2:
        raise ValueError("need at least two classes")
    if np.all(counts < 2):
        raise ValueError("need repeated samples of some class")

    mean, within, between = _scatter_matrices(x, labels)
    dim = x.shape[1]
    within = within + ridge * np.trace(within) / dim * np.eye(dim)
    eigenvalues, vectors = eigh(between, within)
    order = np.argsort(eigenvalues)[::-1]
    keep = min(target_dim, classes.shape[0] - 1, dim)
    order = order[:keep]
    return LdaModel(mean, vectors[:, order].T, eigenvalues[order])


def lda_project(model: LdaModel, embeddings: np.ndarray) -> np.ndarray:
    """Center and project embeddings; accepts a vector or a batch."""
    x = np.asarray(embeddings, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x) - model.mean
    out = x @ model.projection.T
    return out[0] if single else out
