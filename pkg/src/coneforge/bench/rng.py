"""Deterministic random streams for benchmark problem generation.

Streams are counter-based (Philox) and keyed by a string identity such
as ("rkf", 25, seed), so every instance is reproducible across runs,
processes, and platforms.  Normal variates are produced by applying the
inverse normal CDF to open-interval uniforms instead of the generator's
native rejection sampler, which keeps the draw sequence identical
everywhere.
"""

from __future__ import annotations

import hashlib

import numpy as np
from scipy.special import ndtri

_TWO53 = float(1 << 53)


def stream(*key_parts) -> np.random.Generator:
    """Return a Generator keyed by the given identity parts."""
    tag = ":".join(str(p) for p in key_parts)
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def uniform(rng: np.random.Generator, lo: float, hi: float, size=None):
    """Uniform draw on [lo, hi)."""
    return lo + (hi - lo) * rng.random(size)


def normal(rng: np.random.Generator, mean: float = 0.0, std: float = 1.0, size=None):
    """Normal draw via inverse CDF of an open-interval uniform."""
    u = (rng.integers(0, 1 << 53, size=size).astype(np.float64) + 0.5) / _TWO53
    return mean + std * ndtri(u)
