"""Named, hash-derived random streams.

Every stochastic component (corpus generation, score noise, selection
randomness) draws from its own stream so that changing one does not
perturb the others.  Streams are derived by hashing string/int labels,
which is stable across platforms and numpy versions.
"""

from __future__ import annotations

import hashlib

import numpy as np


def seed_for(*parts: int | str) -> int:
    """Derive a 64-bit seed from a base seed and a sequence of labels."""
    key = "/".join(str(p) for p in parts)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def rng_for(*parts: int | str) -> np.random.Generator:
    """A fresh, deterministically seeded generator for the given labels."""
    return np.random.default_rng(seed_for(*parts))
