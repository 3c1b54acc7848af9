"""The active-learning iteration: select, annotate, finetune, validate.

Each round scores every unlabeled candidate, picks one document via the
configured strategy, gets a corrected summary from the oracle annotator,
finetunes the learner on it, and keeps or reverts the new weights based
on held-out validation.  One sample per round, low-resource style.
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import diversity, strategy
from .pool import AnnotatedPair, Corpus, Document, PoolState, Summary, init_pools, transfer
from .scoring import (
    NormalizedScores,
    RawScores,
    Scorer,
    ScorerError,
    hallucination_score,
    normalize_batch,
    score_batch,
)
from .seeds import rng_for
from .strategy import AcquisitionConfig, StrategyKind


class AnnotationError(ValueError):
    """The oracle cannot produce an annotation for this pair."""


class RunAborted(RuntimeError):
    """A scorer or learner failure killed the run; partial records survive."""

    def __init__(self, message: str, round_index: int, records: list["IterationRecord"]):
        super().__init__(message)
        self.round_index = round_index
        self.records = records


class Learner(ABC):
    """Summarization model contract: generation, finetuning and exact
    snapshot/restore of weights."""

    #: identifier of the training objective used by ``finetune``
    objective: str = "supervised"

    @abstractmethod
    def generate(self, doc: Document, generation_round: int = 0) -> Summary:
        raise NotImplementedError

    @abstractmethod
    def finetune(self, pair: AnnotatedPair) -> None:
        raise NotImplementedError

    @abstractmethod
    def snapshot(self) -> object:
        raise NotImplementedError

    @abstractmethod
    def restore(self, snap: object) -> None:
        raise NotImplementedError


class OracleAnnotator(ABC):
    """Produces the corrected summary for a selected document."""

    @abstractmethod
    def annotate(self, doc: Document, summary: Summary, annotation_round: int = 0) -> AnnotatedPair:
        raise NotImplementedError


class GoldOracle(OracleAnnotator):
    """Emulates the human annotator with reference summaries: the corrected
    text is the corpus gold, regardless of what the model produced."""

    def __init__(self, corpus: Corpus):
        self._corpus = corpus

    def annotate(self, doc: Document, summary: Summary, annotation_round: int = 0) -> AnnotatedPair:
        gold = self._corpus.gold_summary(doc.id)
        if gold is None:
            raise AnnotationError(f"document {doc.id!r} has no gold summary")
        return AnnotatedPair(doc_id=doc.id, gold_summary=gold, annotation_round=annotation_round)


class IdentityOracle(OracleAnnotator):
    """Degenerate annotator that accepts the model summary unchanged."""

    def annotate(self, doc: Document, summary: Summary, annotation_round: int = 0) -> AnnotatedPair:
        return AnnotatedPair(doc_id=doc.id, gold_summary=summary.text, annotation_round=annotation_round)


def annotate(
    oracle: OracleAnnotator, doc: Document, summary: Summary, annotation_round: int = 0
) -> AnnotatedPair:
    if summary.doc_id != doc.id:
        raise AnnotationError(f"summary references {summary.doc_id!r}, not {doc.id!r}")
    return oracle.annotate(doc, summary, annotation_round)


@dataclass
class IterationRecord:
    round: int
    doc_id: str
    raw: RawScores
    norm: NormalizedScores
    h_halu: float
    h_div: float
    acquisition: float
    val_metric: float
    best_val_metric: float
    reverted: bool
    test_metrics: dict[str, float]


@dataclass(frozen=True)
class RunConfig:
    strategy: StrategyKind = StrategyKind.HADAS
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    budget: int = 100
    seed: int = 0
    regenerate_summaries_each_round: bool = True
    patience: int | None = None
    # study switch: re-normalize labeled raw scores in the current pool's
    # min/max context instead of freezing profiles at annotation time
    recompute_labeled_profiles: bool = False

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.patience is not None and self.patience < 1:
            raise ValueError("patience must be >= 1 when set")


@dataclass
class RunLog:
    """One run's records plus the metadata needed for aggregation."""

    strategy: str
    seed: int
    budget: int
    records: list[IterationRecord]


CSV_COLUMNS = [
    "round", "doc_id", "sf", "disc", "cv", "h_halu", "h_div", "acquisition",
    "val_metric", "reverted", "test_sf", "test_disc", "test_cv", "test_rouge_l",
]


def _csv_row(rec: IterationRecord) -> list[str]:
    values = [
        rec.round, rec.doc_id, rec.raw.sf, rec.raw.disc, rec.raw.cv,
        rec.h_halu, rec.h_div, rec.acquisition, rec.val_metric,
        "true" if rec.reverted else "false",
        rec.test_metrics["sf"], rec.test_metrics["disc"],
        rec.test_metrics["cv"], rec.test_metrics["rouge_l"],
    ]
    return [v if isinstance(v, str) else repr(v) for v in values]


def write_run_log_csv(log: RunLog, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for rec in log.records:
            fh.write(",".join(_csv_row(rec)) + "\n")


def write_run_log_json(log: RunLog, path: str | Path) -> None:
    payload = {
        "strategy": log.strategy,
        "seed": log.seed,
        "budget": log.budget,
        "records": [
            {
                "round": rec.round,
                "doc_id": rec.doc_id,
                "raw": list(rec.raw.as_tuple()),
                "norm": list(rec.norm.as_tuple()),
                "h_halu": rec.h_halu,
                "h_div": rec.h_div,
                "acquisition": rec.acquisition,
                "val_metric": rec.val_metric,
                "best_val_metric": rec.best_val_metric,
                "reverted": rec.reverted,
                "test_metrics": rec.test_metrics,
            }
            for rec in log.records
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_run_log_json(path: str | Path) -> RunLog:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    records = [
        IterationRecord(
            round=rec["round"],
            doc_id=rec["doc_id"],
            raw=RawScores(*rec["raw"]),
            norm=NormalizedScores(*rec["norm"]),
            h_halu=rec["h_halu"],
            h_div=rec["h_div"],
            acquisition=rec["acquisition"],
            val_metric=rec["val_metric"],
            best_val_metric=rec["best_val_metric"],
            reverted=rec["reverted"],
            test_metrics=dict(rec["test_metrics"]),
        )
        for rec in payload["records"]
    ]
    return RunLog(
        strategy=payload["strategy"], seed=payload["seed"],
        budget=payload["budget"], records=records,
    )


def validation_metric(
    learner: Learner, scorer: Scorer, val_set: Sequence[Document], generation_round: int = 0
) -> float:
    """Unweighted mean of the three raw scores over the validation set."""
    pairs = [(doc, learner.generate(doc, generation_round)) for doc in val_set]
    raw = score_batch(scorer, pairs)
    return float(np.mean([[r.sf, r.disc, r.cv] for r in raw]))


def validate_and_maybe_revert(
    learner: Learner,
    best_snapshot: object | None,
    best_metric: float,
    val_set: Sequence[Document],
    scorer: Scorer,
    generation_round: int = 0,
    metric: float | None = None,
) -> tuple[Learner, object, float, bool]:
    """Apply the checkpoint-revert rule after a finetune step.

    Reverts only on a strict decrease of the validation aggregate; a tie
    keeps the new weights.  ``metric`` short-circuits the validation pass
    when the caller already measured it.  Returns the (possibly restored)
    learner, the snapshot standing for the best weights, the best metric,
    and whether a revert happened.
    """
    if metric is None:
        metric = validation_metric(learner, scorer, val_set, generation_round)
    if best_snapshot is not None and metric < best_metric:
        learner.restore(best_snapshot)
        return learner, best_snapshot, best_metric, True
    best = metric if best_snapshot is None else max(metric, best_metric)
    return learner, learner.snapshot(), best, False


def _test_metrics(
    learner: Learner, scorer: Scorer, test_set: Corpus, generation_round: int
) -> dict[str, float]:
    from .metrics import rouge_l

    docs = list(test_set)
    summaries = [learner.generate(doc, generation_round) for doc in docs]
    raw = score_batch(scorer, list(zip(docs, summaries)))
    rouges = []
    for doc, summary in zip(docs, summaries):
        gold = test_set.gold_summary(doc.id)
        rouges.append(rouge_l(summary.text, gold) if gold is not None else 0.0)
    return {
        "sf": float(np.mean([r.sf for r in raw])),
        "disc": float(np.mean([r.disc for r in raw])),
        "cv": float(np.mean([r.cv for r in raw])),
        "rouge_l": float(np.mean(rouges)),
    }


def _labeled_profiles_in_context(
    pool: PoolState,
    labeled_raw: dict[str, RawScores],
    candidate_raw: Sequence[RawScores],
) -> list[diversity.HallucinationProfile]:
    # labeled raws can fall outside the current pool's span; clip to keep
    # the renormalized values valid
    profiles = []
    columns = list(zip(*(r.as_tuple() for r in candidate_raw)))
    spans = [(min(col), max(col)) for col in columns]
    for item in pool.labeled:
        raw = labeled_raw[item.doc_id]
        values = []
        for (lo, hi), v in zip(spans, raw.as_tuple()):
            values.append(0.5 if hi == lo else min(1.0, max(0.0, (v - lo) / (hi - lo))))
        profiles.append(diversity.profile_from_values(values))
    return profiles


def run_experiment(
    cfg: RunConfig,
    train: Corpus,
    learner: Learner,
    scorer: Scorer,
    oracle: OracleAnnotator,
    val_set: Corpus | Sequence[Document],
    test_set: Corpus,
) -> RunLog:
    """Run the full selection/annotation/finetuning loop for ``cfg.budget`` rounds.

    Scorer or annotation failures abort the run; the partial log rides on
    the raised :class:`RunAborted`.
    """
    pool = init_pools(train)
    if cfg.budget > len(pool.unlabeled):
        raise ValueError(
            f"budget {cfg.budget} exceeds unlabeled pool size {len(pool.unlabeled)}"
        )
    val_docs = list(val_set)
    strategy_rng = rng_for(cfg.seed, "strategy")
    weights = cfg.acquisition.weights

    embeddings = None
    if cfg.strategy is StrategyKind.IDDS:
        embeddings = {doc.id: doc.embedding for doc in train}

    records: list[IterationRecord] = []
    labeled_raw: dict[str, RawScores] = {}
    summary_cache: dict[str, Summary] = {}
    rounds_without_improvement = 0

    try:
        best_snapshot = learner.snapshot()
        best_metric = validation_metric(learner, scorer, val_docs, generation_round=0)

        for round_index in range(cfg.budget):
            candidates = [train.document(doc_id) for doc_id in pool.unlabeled]
            if cfg.regenerate_summaries_each_round or not summary_cache:
                summary_cache = {
                    doc.id: learner.generate(doc, round_index) for doc in candidates
                }
            pairs = [(doc, summary_cache[doc.id]) for doc in candidates]
            raw = score_batch(scorer, pairs)
            norm = normalize_batch(raw)

            if cfg.recompute_labeled_profiles:
                labeled_profiles = _labeled_profiles_in_context(pool, labeled_raw, raw)
            else:
                labeled_profiles = [item.profile for item in pool.labeled]

            cand_pairs = [(doc.id, n) for doc, n in zip(candidates, norm)]
            criteria = strategy.selection_criteria(
                cfg.strategy, cfg.acquisition, cand_pairs, labeled_profiles, strategy_rng,
                embeddings=embeddings, labeled_ids=pool.labeled_ids,
            )
            selected_index = strategy.argmax_first(criteria)
            selected = candidates[selected_index]
            selected_norm = norm[selected_index]
            selected_profile = diversity.to_profile(selected_norm)
            h_div = float(diversity.diversity_score(selected_profile, labeled_profiles))
            h_halu = hallucination_score(selected_norm, weights)

            pair = annotate(oracle, selected, summary_cache[selected.id], round_index)
            pool = transfer(pool, selected.id, pair, selected_profile)
            labeled_raw[selected.id] = raw[selected_index]
            summary_cache.pop(selected.id, None)

            learner.finetune(pair)
            measured = validation_metric(learner, scorer, val_docs, round_index + 1)
            learner, best_snapshot, new_best, reverted = validate_and_maybe_revert(
                learner, best_snapshot, best_metric, val_docs, scorer,
                generation_round=round_index + 1, metric=measured,
            )
            records.append(
                IterationRecord(
                    round=round_index,
                    doc_id=selected.id,
                    raw=raw[selected_index],
                    norm=selected_norm,
                    h_halu=h_halu,
                    h_div=h_div,
                    acquisition=float(criteria[selected_index]),
                    val_metric=measured,
                    best_val_metric=new_best,
                    reverted=reverted,
                    test_metrics=_test_metrics(learner, scorer, test_set, round_index + 1),
                )
            )
            if new_best > best_metric:
                rounds_without_improvement = 0
            else:
                rounds_without_improvement += 1
            best_metric = new_best
            if cfg.patience is not None and rounds_without_improvement >= cfg.patience:
                break
    except (ScorerError, AnnotationError, ValueError, RuntimeError) as exc:
        # scorer, oracle and learner contract failures all land here; the
        # partial log rides on the exception
        raise RunAborted(
            f"round {len(records)}: {exc}", round_index=len(records), records=records
        ) from exc

    return RunLog(
        strategy=cfg.strategy.value, seed=cfg.seed, budget=cfg.budget, records=records
    )
