"""Hallucination-diversity-aware active learning for summarization.

A pool-based selection engine that scores document-summary pairs for
three hallucination types, blends severity with type diversity into an
acquisition criterion, and learns from oracle-annotated samples one
round at a time -- plus a seeded simulation world that makes the whole
loop reproducible on a laptop.
"""

from .diversity import HallucinationProfile, diversity_score, jsd, to_profile
from .loop import (
    GoldOracle,
    IdentityOracle,
    IterationRecord,
    Learner,
    OracleAnnotator,
    RunAborted,
    RunConfig,
    RunLog,
    run_experiment,
    validate_and_maybe_revert,
)
from .metrics import CurveSummary, aggregate_runs, aulc, report, rouge_l
from .pool import (
    AnnotatedPair,
    Corpus,
    Document,
    PoolState,
    Summary,
    init_pools,
    load_corpus_jsonl,
    save_corpus_jsonl,
    transfer,
)
from .scoring import (
    NormalizedScores,
    RawScores,
    Scorer,
    ScorerError,
    Weights,
    hallucination_score,
    minmax_normalize,
    score_batch,
)
from .simworld import (
    DocLatent,
    SimLearner,
    SimScorer,
    SimulatedLearner,
    WorldConfig,
    generate_corpus,
    sim_finetune,
    sim_generate_scores,
)
from .strategy import AcquisitionConfig, StrategyKind, acquisition, idds_score, select

__version__ = "0.1.0"
