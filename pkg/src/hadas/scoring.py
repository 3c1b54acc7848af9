"""Per-type faithfulness scores, min-max normalization and the weighted blend.

Three scores are tracked per document-summary pair: semantic-frame
consistency (``sf``), discourse consistency (``disc``) and content
verifiability (``cv``).  All are probabilities in [0, 1]; higher means
more faithful, so a *low* blended score flags a hallucination-prone pair.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

from .pool import Document, Summary

SCORE_TYPES = ("sf", "disc", "cv")


class ScorerError(RuntimeError):
    """A scorer produced an invalid result (or failed outright) for a batch.

    ``index`` identifies the offending pair within the batch, if known.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


def _check_unit(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class RawScores:
    """Raw detector outputs for one pair; each component in [0, 1]."""

    sf: float
    disc: float
    cv: float

    def __post_init__(self) -> None:
        for name in SCORE_TYPES:
            object.__setattr__(self, name, _check_unit(getattr(self, name), name))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.sf, self.disc, self.cv)


@dataclass(frozen=True)
class NormalizedScores:
    """Min-max images of the raw scores, each in [0, 1]."""

    sf_hat: float
    disc_hat: float
    cv_hat: float

    def __post_init__(self) -> None:
        for name in ("sf_hat", "disc_hat", "cv_hat"):
            object.__setattr__(self, name, _check_unit(getattr(self, name), name))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.sf_hat, self.disc_hat, self.cv_hat)


@dataclass(frozen=True)
class Weights:
    """Blend weights for the three score types; non-negative, summing to 1."""

    w1: float = 1.0 / 3.0
    w2: float = 1.0 / 3.0
    w3: float = 1.0 / 3.0

    def __post_init__(self) -> None:
        for name in ("w1", "w2", "w3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        total = self.w1 + self.w2 + self.w3
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {total!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.w1, self.w2, self.w3)

    @classmethod
    def single(cls, score_type: str) -> "Weights":
        """Weight vector that projects onto one score type."""
        if score_type not in SCORE_TYPES:
            raise ValueError(f"unknown score type {score_type!r}")
        values = [0.0, 0.0, 0.0]
        values[SCORE_TYPES.index(score_type)] = 1.0
        return cls(*values)


class Scorer(ABC):
    """Batch mapping from document-summary pairs to raw score triples.

    Implementations must be deterministic for identical inputs within one
    run and may return plain ``(sf, disc, cv)`` tuples; range checking is
    done centrally by :func:`score_batch`.
    """

    @abstractmethod
    def score_pairs(
        self, pairs: Sequence[tuple[Document, Summary]]
    ) -> list[tuple[float, float, float]]:
        raise NotImplementedError


class ConstantScorer(Scorer):
    """Fixed-output scorer, handy for plumbing tests."""

    def __init__(self, sf: float = 0.5, disc: float = 0.5, cv: float = 0.5):
        self._triple = (float(sf), float(disc), float(cv))

    def score_pairs(self, pairs):
        return [self._triple for _ in pairs]


def score_batch(scorer: Scorer, pairs: Sequence[tuple[Document, Summary]]) -> list[RawScores]:
    """Score a batch, order-preserving, rejecting out-of-range outputs.

    Out-of-range values are errors, never clamped: silently clamping
    would hide bridge bugs.
    """
    if not pairs:
        raise ScorerError("empty batch")
    for i, (doc, summary) in enumerate(pairs):
        if summary.doc_id != doc.id:
            raise ScorerError(
                f"summary at index {i} references {summary.doc_id!r}, not {doc.id!r}", index=i
            )
    try:
        triples = scorer.score_pairs(pairs)
    except ScorerError:
        raise
    except Exception as exc:
        raise ScorerError(f"scorer failed: {exc}") from exc
    if len(triples) != len(pairs):
        raise ScorerError(f"scorer returned {len(triples)} results for {len(pairs)} pairs")
    out: list[RawScores] = []
    for i, triple in enumerate(triples):
        try:
            out.append(RawScores(*triple))
        except (TypeError, ValueError) as exc:
            raise ScorerError(f"invalid scores at index {i}: {exc}", index=i) from None
    return out


def minmax_normalize(values: Sequence[float]) -> list[float]:
    """Map values affinely onto [0, 1]; a constant batch maps to all 0.5.

    The degenerate constant keeps every candidate comparable and keeps the
    blended score defined; any constant preserves the argmax.
    """
    if len(values) == 0:
        raise ValueError("cannot normalize an empty list")
    vals = [float(v) for v in values]
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("values must be finite")
    lo, hi = min(vals), max(vals)
    if hi == lo:
        return [0.5] * len(vals)
    span = hi - lo
    return [(v - lo) / span for v in vals]


def normalize_batch(raw: Sequence[RawScores]) -> list[NormalizedScores]:
    """Min-max normalize each score type independently across a batch."""
    per_type = [minmax_normalize([getattr(r, t) for r in raw]) for t in SCORE_TYPES]
    return [NormalizedScores(*(col[i] for col in per_type)) for i in range(len(raw))]


def hallucination_score(norm: NormalizedScores, w: Weights) -> float:
    """Weighted blend of the normalized scores; lower means more hallucination."""
    return w.w1 * norm.sf_hat + w.w2 * norm.disc_hat + w.w3 * norm.cv_hat
