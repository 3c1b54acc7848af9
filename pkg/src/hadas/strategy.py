"""Selection strategies: diversity-aware acquisition and the baselines.

The acquisition blend trades hallucination severity against type
diversity; GreedyHalu is its lambda=0 degenerate, single-type variants
greedily chase one normalized score, IDDS contrasts embedding
similarities, and Random ignores scores entirely.  All ties break to the
earliest candidate in pool order: determinism trumps randomized ties.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .diversity import HallucinationProfile, diversity_scores, to_profile
from .scoring import NormalizedScores, Weights, hallucination_score


class StrategyKind(Enum):
    RANDOM = "Random"
    IDDS = "IDDS"
    GREEDY_HALU = "GreedyHalu"
    SINGLE_SF = "SingleSF"
    SINGLE_DISC = "SingleDisc"
    SINGLE_CV = "SingleCV"
    HADAS = "HADAS"

    @classmethod
    def parse(cls, name: str) -> "StrategyKind":
        for kind in cls:
            if kind.value.lower() == name.strip().lower():
                return kind
        raise ValueError(
            f"unknown strategy {name!r}; expected one of "
            + ", ".join(k.value for k in cls)
        )


SINGLE_TYPE_INDEX = {
    StrategyKind.SINGLE_SF: 0,
    StrategyKind.SINGLE_DISC: 1,
    StrategyKind.SINGLE_CV: 2,
}


@dataclass(frozen=True)
class AcquisitionConfig:
    """Hyperparameters of the acquisition blend.

    ``single_type_with_diversity`` keeps the diversity term (over the full
    three-type profile) in the single-type variants; default is pure
    greedy on the one score.
    """

    lam: float = 0.33
    weights: Weights = field(default_factory=Weights)
    single_type_with_diversity: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.lam!r}")


def acquisition(h_div: float, h_halu: float, lam: float) -> float:
    """lam * h_div - (1 - lam) * h_halu; in [-1, 1] for unit inputs."""
    return lam * h_div - (1.0 - lam) * h_halu


def idds_score(
    candidate_emb: Sequence[float],
    unlabeled_embs: Sequence[Sequence[float]],
    labeled_embs: Sequence[Sequence[float]],
) -> float:
    """Mean cosine similarity to the unlabeled pool minus mean cosine
    similarity to the labeled pool (0 when the labeled pool is empty)."""
    if len(unlabeled_embs) == 0:
        raise ValueError("unlabeled embeddings must be non-empty")
    cand = np.asarray(candidate_emb, dtype=float)

    def mean_cosine(embs: Sequence[Sequence[float]]) -> float:
        mat = np.asarray(embs, dtype=float)
        if mat.ndim != 2 or mat.shape[1] != cand.shape[0]:
            raise ValueError("embedding dimension mismatch")
        norms = np.linalg.norm(mat, axis=1)
        cand_norm = np.linalg.norm(cand)
        if cand_norm == 0.0 or np.any(norms == 0.0):
            raise ValueError("zero-norm embedding")
        return float(np.mean((mat @ cand) / (norms * cand_norm)))

    score = mean_cosine(unlabeled_embs)
    if len(labeled_embs) > 0:
        score -= mean_cosine(labeled_embs)
    return score


def argmax_first(values: Sequence[float]) -> int:
    """Index of the maximum, ties broken to the earliest position."""
    best, best_i = None, 0
    for i, v in enumerate(values):
        if best is None or v > best:
            best, best_i = v, i
    return best_i


def select(
    kind: StrategyKind,
    cfg: AcquisitionConfig,
    candidates: Sequence[tuple[str, NormalizedScores]],
    labeled_profiles: Sequence[HallucinationProfile],
    rng: np.random.Generator,
    *,
    embeddings: Mapping[str, Sequence[float]] | None = None,
    labeled_ids: Sequence[str] = (),
) -> str:
    """Pick the candidate doc id maximizing the strategy's criterion.

    ``embeddings`` maps doc id to vector and is required for IDDS only;
    ``labeled_ids`` supplies the labeled pool for the IDDS contrast term.
    """
    if not candidates:
        raise ValueError("candidate list is empty")
    criteria = selection_criteria(
        kind, cfg, candidates, labeled_profiles, rng,
        embeddings=embeddings, labeled_ids=labeled_ids,
    )
    return candidates[argmax_first(criteria)][0]


def selection_criteria(
    kind: StrategyKind,
    cfg: AcquisitionConfig,
    candidates: Sequence[tuple[str, NormalizedScores]],
    labeled_profiles: Sequence[HallucinationProfile],
    rng: np.random.Generator,
    *,
    embeddings: Mapping[str, Sequence[float]] | None = None,
    labeled_ids: Sequence[str] = (),
) -> list[float]:
    """Per-candidate criterion values for ``kind``, in candidate order.

    Random is expressed as a one-hot criterion over a seeded index draw so
    the shared first-max tie-break applies uniformly.
    """
    n = len(candidates)
    if kind is StrategyKind.RANDOM:
        chosen = int(rng.integers(n))
        return [1.0 if i == chosen else 0.0 for i in range(n)]

    if kind is StrategyKind.IDDS:
        if embeddings is None:
            raise ValueError("IDDS needs document embeddings")
        missing = [doc_id for doc_id, _ in candidates if embeddings.get(doc_id) is None]
        missing += [doc_id for doc_id in labeled_ids if embeddings.get(doc_id) is None]
        if missing:
            raise ValueError(f"IDDS needs embeddings for all documents; missing {missing[0]!r}")
        unlabeled_embs = [embeddings[doc_id] for doc_id, _ in candidates]
        labeled_embs = [embeddings[doc_id] for doc_id in labeled_ids]
        return [idds_score(emb, unlabeled_embs, labeled_embs) for emb in unlabeled_embs]

    if kind is StrategyKind.GREEDY_HALU:
        return [-hallucination_score(norm, cfg.weights) for _, norm in candidates]

    if kind in SINGLE_TYPE_INDEX:
        idx = SINGLE_TYPE_INDEX[kind]
        scores = [norm.as_tuple()[idx] for _, norm in candidates]
        if not cfg.single_type_with_diversity:
            return [-s for s in scores]
        divs = diversity_scores([to_profile(norm) for _, norm in candidates], labeled_profiles)
        return [acquisition(d, s, cfg.lam) for d, s in zip(divs, scores)]

    if kind is StrategyKind.HADAS:
        divs = diversity_scores([to_profile(norm) for _, norm in candidates], labeled_profiles)
        return [
            acquisition(float(d), hallucination_score(norm, cfg.weights), cfg.lam)
            for d, (_, norm) in zip(divs, candidates)
        ]

    raise ValueError(f"unhandled strategy {kind!r}")
