"""Target-source selection by embedding affinity."""

from __future__ import annotations

import warnings

import numpy as np

from .embed import Embedding
from .plda import PldaModel, plda_score

__all__ = ["select_target"]


def select_target(candidates: list[Embedding], enrollment: Embedding, model: PldaModel) -> int:
    """Index of the candidate scoring highest against the enrollment.

    Ties are broken toward the lowest index and reported with a warning.
    """
    if len(candidates) < 2:
        raise ValueError("need at least two candidates to select from")
    scores = plda_score(
        model,
        np.stack([c.vector for c in candidates]),
        enrollment.vector,
    )
    best = int(np.argmax(scores))
    if np.count_nonzero(scores == scores[best]) > 1:
        warnings.warn(f"tie between candidates scoring {scores[best]:.6f}; keeping index {best}")
    return best
