"""Per-type faithfulness scorers behind the bridge.

Three scorer families, mirroring how the engine's three score types are
detected in practice: an entailment-style consistency probability for
semantic frame errors, a sentence-level yes-probability for discourse
errors, and token-level precision similarity for content verifiability.

Stub mode replaces each model with a deterministic text statistic of the
same shape and granularity (relation-level, sentence-level, token-level),
so protocol and engine integration tests run without any model download.
Real checkpoints are configuration keys; the contract is only that each
scorer maps (document, summary) to a probability in [0, 1].
"""

from __future__ import annotations

import re

_TOKEN = re.compile(r"[a-z0-9]+")
_SENTENCE = re.compile(r"[.!?]+")


def tokens(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


def sentences(text: str) -> list[str]:
    return [s for s in (part.strip() for part in _SENTENCE.split(text)) if s]


class StubSemanticFrameScorer:
    """Relation-level stub: bigram containment of the summary in the document."""

    def score(self, document: str, summary: str) -> float:
        doc_tokens, sum_tokens = tokens(document), tokens(summary)
        if not sum_tokens:
            return 0.0
        if len(sum_tokens) < 2:
            return 1.0 if sum_tokens[0] in set(doc_tokens) else 0.0
        doc_bigrams = set(zip(doc_tokens, doc_tokens[1:]))
        sum_bigrams = list(zip(sum_tokens, sum_tokens[1:]))
        hits = sum(1 for b in sum_bigrams if b in doc_bigrams)
        return hits / len(sum_bigrams)


class StubDiscourseScorer:
    """Sentence-level stub: per-sentence token containment, averaged.

    Multi-sentence summaries aggregate by averaging the per-sentence
    probabilities (deviation point: the sentence-level aggregation rule
    is not otherwise pinned down).
    """

    def score(self, document: str, summary: str) -> float:
        doc_vocab = set(tokens(document))
        parts = sentences(summary)
        if not parts:
            return 0.0
        per_sentence = []
        for sentence in parts:
            sent_tokens = tokens(sentence)
            if not sent_tokens:
                continue
            per_sentence.append(sum(t in doc_vocab for t in sent_tokens) / len(sent_tokens))
        return sum(per_sentence) / len(per_sentence) if per_sentence else 0.0


class StubContentVerifiabilityScorer:
    """Token-level stub: unigram precision of summary tokens against the document."""

    def score(self, document: str, summary: str) -> float:
        doc_vocab = set(tokens(document))
        sum_tokens = tokens(summary)
        if not sum_tokens:
            return 0.0
        return sum(t in doc_vocab for t in sum_tokens) / len(sum_tokens)


class ScorerSet:
    """The three per-type scorers the server consults per request."""

    def __init__(self, sf, disc, cv):
        self.sf = sf
        self.disc = disc
        self.cv = cv

    def score(self, document: str, summary: str) -> tuple[float, float, float]:
        return (
            float(self.sf.score(document, summary)),
            float(self.disc.score(document, summary)),
            float(self.cv.score(document, summary)),
        )

    @classmethod
    def stub(cls) -> "ScorerSet":
        return cls(
            StubSemanticFrameScorer(),
            StubDiscourseScorer(),
            StubContentVerifiabilityScorer(),
        )

    @classmethod
    def from_model_config(cls, config: dict) -> "ScorerSet":
        from .models import (
            EntailmentConsistencyScorer,
            QAYesProbabilityScorer,
            TokenPrecisionScorer,
        )

        for key in ("sf_model", "disc_model", "cv_model"):
            if key not in config:
                raise ValueError(f"model config is missing {key!r}")
        return cls(
            EntailmentConsistencyScorer(config["sf_model"]),
            QAYesProbabilityScorer(config["disc_model"]),
            TokenPrecisionScorer(config["cv_model"]),
        )
