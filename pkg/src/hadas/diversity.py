"""Hallucination type profiles and the average-JSD diversity score.

A candidate's normalized scores are projected onto the probability
simplex (with epsilon smoothing so the all-zeros vector becomes uniform)
and compared against every labeled sample's frozen profile via base-2
Jensen-Shannon divergence, so both the divergence and its average live
in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scoring import NormalizedScores

_EPS = 1e-9


@dataclass(frozen=True)
class HallucinationProfile:
    """A point on the simplex over hallucination types (sf, disc, cv, ...).

    The profile length is not pinned to three: additional type scores can
    be appended without touching the divergence math.
    """

    p: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.p) < 2:
            raise ValueError("a profile needs at least two components")
        if any(x < 0 for x in self.p):
            raise ValueError("profile components must be non-negative")
        if abs(sum(self.p) - 1.0) > 1e-9:
            raise ValueError(f"profile must sum to 1, got {sum(self.p)!r}")


def profile_from_values(values: Sequence[float]) -> HallucinationProfile:
    """Project non-negative scores onto the simplex with epsilon smoothing."""
    if any(v < 0 for v in values):
        raise ValueError("profile inputs must be non-negative")
    shifted = [float(v) + _EPS for v in values]
    total = sum(shifted)
    return HallucinationProfile(tuple(v / total for v in shifted))


def to_profile(norm: NormalizedScores) -> HallucinationProfile:
    """Hallucination distribution of one candidate from its normalized scores."""
    return profile_from_values(norm.as_tuple())


def _entropy2(p: Sequence[float]) -> float:
    # Shannon entropy in bits, with 0 * log(0) := 0.
    return -sum(x * math.log2(x) for x in p if x > 0.0)


def jsd(p: HallucinationProfile | Sequence[float], q: HallucinationProfile | Sequence[float]) -> float:
    """Base-2 Jensen-Shannon divergence between two simplex points.

    Computed via the entropy form H(M) - (H(P) + H(Q)) / 2 with
    M = (P + Q) / 2; symmetric, zero iff P = Q, and exactly 1 for
    disjoint supports.
    """
    pv = p.p if isinstance(p, HallucinationProfile) else tuple(p)
    qv = q.p if isinstance(q, HallucinationProfile) else tuple(q)
    if len(pv) != len(qv):
        raise ValueError("profiles have different lengths")
    m = [(a + b) / 2.0 for a, b in zip(pv, qv)]
    value = _entropy2(m) - 0.5 * _entropy2(pv) - 0.5 * _entropy2(qv)
    # guard against sub-epsilon float overshoot at the boundaries
    return min(1.0, max(0.0, value))


def diversity_score(
    candidate: HallucinationProfile, labeled: Sequence[HallucinationProfile]
) -> float:
    """Mean JSD between a candidate and every labeled profile.

    An empty labeled pool yields 0 for every candidate: the first round is
    pure greedy, and any constant is argmax-equivalent.
    """
    if not labeled:
        return 0.0
    return sum(jsd(candidate, q) for q in labeled) / len(labeled)


def _entropy2_rows(a: np.ndarray) -> np.ndarray:
    logs = np.zeros_like(a)
    np.log2(a, out=logs, where=a > 0.0)
    return -(a * logs).sum(axis=-1)


def diversity_scores(
    candidates: Sequence[HallucinationProfile], labeled: Sequence[HallucinationProfile]
) -> np.ndarray:
    """Vectorized :func:`diversity_score` over a candidate batch."""
    if not labeled:
        return np.zeros(len(candidates))
    c = np.asarray([p.p for p in candidates], dtype=float)
    l = np.asarray([p.p for p in labeled], dtype=float)
    m = (c[:, None, :] + l[None, :, :]) / 2.0
    pairwise = _entropy2_rows(m) - 0.5 * _entropy2_rows(c)[:, None] - 0.5 * _entropy2_rows(l)[None, :]
    return np.clip(pairwise, 0.0, 1.0).mean(axis=1)
