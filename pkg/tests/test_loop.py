import pytest

from hadas.loop import (
    AnnotationError,
    GoldOracle,
    IdentityOracle,
    Learner,
    RunAborted,
    RunConfig,
    annotate,
    read_run_log_json,
    run_experiment,
    validate_and_maybe_revert,
    write_run_log_csv,
    write_run_log_json,
    CSV_COLUMNS,
)
from hadas.pool import Corpus, Document, Summary
from hadas.scoring import Scorer, ScorerError
from hadas.seeds import seed_for
from hadas.simworld import SimScorer, SimulatedLearner, WorldConfig, generate_corpus
from hadas.strategy import AcquisitionConfig, StrategyKind


def small_world(seed=0, **kw):
    cfg = WorldConfig(n_train=12, n_test=5, n_val=4, seed=seed, **kw)
    return cfg, generate_corpus(cfg)


def build(cfg, corpora, run_seed=0):
    train, test, val = corpora
    learner = SimulatedLearner([train, test, val], eta=cfg.learning_rate_eta,
                               init_competence=cfg.init_competence)
    scorer = SimScorer(learner, noise_seed=seed_for(run_seed, "noise"),
                       noise_sigma=cfg.noise_sigma)
    return learner, scorer, GoldOracle(train)


class CountingLearner(Learner):
    """Minimal learner whose snapshot is an integer version."""

    def __init__(self):
        self.version = 0

    def generate(self, doc, generation_round=0):
        return Summary(doc_id=doc.id, text=f"v{self.version}")

    def finetune(self, pair):
        self.version += 1

    def snapshot(self):
        return self.version

    def restore(self, snap):
        self.version = snap


def test_run_structural_bookkeeping():
    cfg, corpora = small_world(seed=1)
    learner, scorer, oracle = build(cfg, corpora, run_seed=1)
    run_cfg = RunConfig(strategy=StrategyKind.RANDOM, budget=3, seed=1)
    log = run_experiment(run_cfg, corpora[0], learner, scorer, oracle, corpora[2], corpora[1])
    assert len(log.records) == 3
    assert [rec.round for rec in log.records] == [0, 1, 2]
    assert len({rec.doc_id for rec in log.records}) == 3


def test_budget_larger_than_pool_rejected():
    cfg, corpora = small_world()
    learner, scorer, oracle = build(cfg, corpora)
    with pytest.raises(ValueError, match="budget"):
        run_experiment(RunConfig(budget=13), corpora[0], learner, scorer, oracle,
                       corpora[2], corpora[1])


def test_lambda_zero_trajectory_equivalence():
    cfg, corpora = small_world(seed=2)

    def run(kind, lam):
        learner, scorer, oracle = build(cfg, corpora, run_seed=5)
        run_cfg = RunConfig(strategy=kind, acquisition=AcquisitionConfig(lam=lam),
                            budget=8, seed=5)
        return run_experiment(run_cfg, corpora[0], learner, scorer, oracle,
                              corpora[2], corpora[1])

    hadas = run(StrategyKind.HADAS, 0.0)
    greedy = run(StrategyKind.GREEDY_HALU, 0.0)
    assert [r.doc_id for r in hadas.records] == [r.doc_id for r in greedy.records]
    assert [r.acquisition for r in hadas.records] == [r.acquisition for r in greedy.records]


def test_full_run_determinism():
    cfg, corpora = small_world(seed=3)

    def run():
        learner, scorer, oracle = build(cfg, corpora, run_seed=9)
        run_cfg = RunConfig(strategy=StrategyKind.HADAS, budget=6, seed=9)
        return run_experiment(run_cfg, corpora[0], learner, scorer, oracle,
                              corpora[2], corpora[1])

    a, b = run(), run()
    assert [(r.doc_id, r.val_metric, r.acquisition, r.test_metrics) for r in a.records] == \
           [(r.doc_id, r.val_metric, r.acquisition, r.test_metrics) for r in b.records]


def test_best_val_metric_monotone():
    cfg, corpora = small_world(seed=4)
    learner, scorer, oracle = build(cfg, corpora, run_seed=2)
    log = run_experiment(RunConfig(strategy=StrategyKind.HADAS, budget=10, seed=2),
                         corpora[0], learner, scorer, oracle, corpora[2], corpora[1])
    bests = [rec.best_val_metric for rec in log.records]
    assert all(b2 >= b1 for b1, b2 in zip(bests, bests[1:]))
    running = max(log.records[0].val_metric, log.records[0].best_val_metric)
    for rec in log.records:
        running = max(running, rec.val_metric)
        assert rec.best_val_metric == pytest.approx(running)


def test_each_round_transfers_exactly_one():
    cfg, corpora = small_world(seed=5)
    learner, scorer, oracle = build(cfg, corpora, run_seed=3)
    log = run_experiment(RunConfig(strategy=StrategyKind.GREEDY_HALU, budget=5, seed=3),
                         corpora[0], learner, scorer, oracle, corpora[2], corpora[1])
    ids = [rec.doc_id for rec in log.records]
    assert len(ids) == len(set(ids)) == 5


def test_frozen_learner_cached_summaries_stable_scores():
    cfg, corpora = small_world(seed=6)
    train, test, val = corpora

    class FrozenLearner(SimulatedLearner):
        def finetune(self, pair):
            pass

    learner = FrozenLearner([train, test, val])
    scorer = SimScorer(learner, noise_seed=7, noise_sigma=0.1)
    run_cfg = RunConfig(strategy=StrategyKind.RANDOM, budget=4, seed=7,
                        regenerate_summaries_each_round=False)
    log = run_experiment(run_cfg, train, learner, scorer, GoldOracle(train), val, test)
    # untouched candidates keep identical raw scores across rounds: the
    # selected docs' scores must match what the previous rounds saw for them
    seen = {}
    for rec in log.records:
        assert rec.doc_id not in seen
        seen[rec.doc_id] = rec.raw
    # rescore the cached-round summaries: identical values
    for rec in log.records:
        doc = train.document(rec.doc_id)
        summary = Summary(doc_id=doc.id, text="ignored", generation_round=0)
        again = scorer.score_pairs([(doc, summary)])[0]
        assert again == rec.raw.as_tuple()


def test_validate_and_maybe_revert_strict_decrease():
    learner = CountingLearner()
    learner.version = 5
    out_learner, snap, best, reverted = validate_and_maybe_revert(
        learner, best_snapshot=3, best_metric=0.6, val_set=[], scorer=None, metric=0.5
    )
    assert reverted is True
    assert best == 0.6
    assert snap == 3
    assert out_learner.version == 3


def test_validate_and_maybe_revert_improvement():
    learner = CountingLearner()
    learner.version = 5
    _, snap, best, reverted = validate_and_maybe_revert(
        learner, best_snapshot=3, best_metric=0.6, val_set=[], scorer=None, metric=0.7
    )
    assert reverted is False and best == 0.7 and snap == 5


def test_validate_and_maybe_revert_tie_keeps_new():
    learner = CountingLearner()
    learner.version = 5
    _, snap, best, reverted = validate_and_maybe_revert(
        learner, best_snapshot=3, best_metric=0.6, val_set=[], scorer=None, metric=0.6
    )
    assert reverted is False and best == 0.6 and snap == 5


def test_validate_and_maybe_revert_first_round_absent_snapshot():
    learner = CountingLearner()
    _, snap, best, reverted = validate_and_maybe_revert(
        learner, best_snapshot=None, best_metric=float("-inf"), val_set=[], scorer=None,
        metric=0.42,
    )
    assert reverted is False and best == 0.42 and snap == 0


def test_gold_oracle_returns_corpus_gold():
    docs = [Document(id="d1", text="src text")]
    corpus = Corpus(docs, {"d1": "the gold summary"})
    pair = annotate(GoldOracle(corpus), docs[0], Summary(doc_id="d1", text="model out"), 3)
    assert pair.gold_summary == "the gold summary"
    assert pair.annotation_round == 3


def test_identity_oracle_keeps_summary():
    doc = Document(id="d1", text="src")
    pair = annotate(IdentityOracle(), doc, Summary(doc_id="d1", text="model out"))
    assert pair.gold_summary == "model out"


def test_gold_oracle_missing_gold_rejected():
    corpus = Corpus([Document(id="d1", text="src")])
    with pytest.raises(AnnotationError, match="gold"):
        annotate(GoldOracle(corpus), corpus.document("d1"), Summary(doc_id="d1", text="s"))


def test_annotate_rejects_mismatched_summary():
    doc = Document(id="d1", text="src")
    with pytest.raises(AnnotationError):
        annotate(IdentityOracle(), doc, Summary(doc_id="other", text="s"))


def test_scorer_failure_aborts_with_partial_log():
    cfg, corpora = small_world(seed=8)
    train, test, val = corpora

    class FlakyScorer(Scorer):
        def __init__(self, inner):
            self.inner = inner
            self.calls = 0

        def score_pairs(self, pairs):
            self.calls += 1
            if self.calls > 8:
                raise ScorerError("detector crashed")
            return self.inner.score_pairs(pairs)

    learner = SimulatedLearner([train, test, val])
    scorer = FlakyScorer(SimScorer(learner, noise_seed=1, noise_sigma=0.0))
    with pytest.raises(RunAborted) as err:
        run_experiment(RunConfig(strategy=StrategyKind.RANDOM, budget=6, seed=1),
                       train, learner, scorer, GoldOracle(train), val, test)
    assert err.value.round_index >= 1
    assert len(err.value.records) == err.value.round_index


def test_patience_stops_early():
    cfg, corpora = small_world(seed=9, noise_sigma=0.0)
    train, test, val = corpora

    class StubbornLearner(SimulatedLearner):
        def finetune(self, pair):
            pass  # never improves

    learner = StubbornLearner([train, test, val])
    scorer = SimScorer(learner, noise_seed=2, noise_sigma=0.0)
    log = run_experiment(
        RunConfig(strategy=StrategyKind.RANDOM, budget=10, seed=2, patience=3),
        train, learner, scorer, GoldOracle(train), val, test,
    )
    assert len(log.records) == 3


def test_dominant_world_selection_entropy_sweep():
    # threshold confirmed by an oracle sweep before freezing (20/20 on
    # these seeds); diversity-aware selection spreads across error types
    import math

    import numpy as np

    from hadas.simworld import DocLatent

    def selection_entropy(log, train):
        counts = [0, 0, 0]
        for rec in log.records:
            d = DocLatent.coerce(train.document(rec.doc_id).latent).d
            counts[int(np.argmax(d))] += 1
        total = sum(counts)
        return -sum((c / total) * math.log2(c / total) for c in counts if c)

    wins = 0
    for s in range(20):
        world = WorldConfig(dominance=0, seed=s)
        corpora = generate_corpus(world)
        logs = {}
        for kind, lam in ((StrategyKind.HADAS, 0.33), (StrategyKind.GREEDY_HALU, 0.0)):
            learner, scorer, oracle = build(world, corpora, run_seed=s)
            cfg = RunConfig(strategy=kind, acquisition=AcquisitionConfig(lam=lam),
                            budget=30, seed=s)
            logs[kind] = run_experiment(cfg, corpora[0], learner, scorer, oracle,
                                        corpora[2], corpora[1])
        wins += selection_entropy(logs[StrategyKind.HADAS], corpora[0]) >= \
            selection_entropy(logs[StrategyKind.GREEDY_HALU], corpora[0])
    assert wins >= 18


def test_run_log_csv_and_json_round_trip(tmp_path):
    cfg, corpora = small_world(seed=10)
    learner, scorer, oracle = build(cfg, corpora, run_seed=4)
    log = run_experiment(RunConfig(strategy=StrategyKind.HADAS, budget=4, seed=4),
                         corpora[0], learner, scorer, oracle, corpora[2], corpora[1])
    csv_path = tmp_path / "run.csv"
    json_path = tmp_path / "run.json"
    write_run_log_csv(log, csv_path)
    write_run_log_json(log, json_path)
    header = csv_path.read_text().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    assert len(csv_path.read_text().splitlines()) == 5
    loaded = read_run_log_json(json_path)
    assert loaded.strategy == log.strategy
    assert loaded.budget == log.budget
    assert [r.doc_id for r in loaded.records] == [r.doc_id for r in log.records]
    assert loaded.records[0].val_metric == log.records[0].val_metric
    assert loaded.records[0].test_metrics == log.records[0].test_metrics
