"""Deterministic random streams.

All randomness in the package flows from one integer seed.  Named
sub-streams are derived with a counter-based generator so that adding a
consumer never perturbs the draws of another.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["stream", "substream"]


def stream(seed: int) -> np.random.Generator:
    """Counter-based generator keyed by seed."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.Generator(np.random.Philox(key=seed))


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for the sub-stream (seed, name)."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    tag = zlib.crc32(name.encode("utf-8"))
    return np.random.Generator(np.random.Philox(key=np.array([seed, tag], dtype=np.uint64)))
