"""Corpus data model and the labeled/unlabeled pool state machine.

The corpus is an immutable side table of documents; pools hold document
ids only.  Summaries are regenerated across rounds, documents never are.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence


class PoolError(ValueError):
    """Violation of a pool precondition (duplicate, unknown or reused id)."""


@dataclass(frozen=True)
class Document:
    """A source document. ``latent`` is an opaque per-type difficulty
    attachment used only by the simulation world; ``embedding`` is only
    consumed by the IDDS selection baseline."""

    id: str
    text: str
    token_count: int = -1
    latent: object | None = None
    embedding: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        n = len(self.text.split())
        if self.token_count < 0:
            object.__setattr__(self, "token_count", n)
        elif self.token_count != n:
            raise ValueError(
                f"document {self.id!r}: token_count {self.token_count} != {n} tokens"
            )


@dataclass(frozen=True)
class Summary:
    """A model-generated summary for one document."""

    doc_id: str
    text: str
    token_count: int = -1
    generation_round: int = 0

    def __post_init__(self) -> None:
        n = len(self.text.split())
        if self.token_count < 0:
            object.__setattr__(self, "token_count", n)
        elif self.token_count != n:
            raise ValueError(
                f"summary for {self.doc_id!r}: token_count {self.token_count} != {n} tokens"
            )


@dataclass(frozen=True)
class AnnotatedPair:
    """An annotator-corrected summary for one document.

    At most one annotated pair exists per document over a run; the pair
    is frozen at the round it was produced.
    """

    doc_id: str
    gold_summary: str
    annotation_round: int = 0


class Corpus:
    """Immutable ordered document collection with optional gold summaries."""

    def __init__(self, documents: Sequence[Document], golds: dict[str, str] | None = None):
        if not documents:
            raise PoolError("corpus is empty")
        self._docs: dict[str, Document] = {}
        self._order: list[str] = []
        for doc in documents:
            if doc.id in self._docs:
                raise PoolError(f"duplicate document id {doc.id!r}")
            self._docs[doc.id] = doc
            self._order.append(doc.id)
        self._golds = dict(golds or {})

    def __len__(self) -> int:
        return len(self._order)

    def __iter__(self) -> Iterator[Document]:
        return (self._docs[i] for i in self._order)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._docs

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(self._order)

    def document(self, doc_id: str) -> Document:
        try:
            return self._docs[doc_id]
        except KeyError:
            raise PoolError(f"unknown document id {doc_id!r}") from None

    def gold_summary(self, doc_id: str) -> str | None:
        self.document(doc_id)
        return self._golds.get(doc_id)


@dataclass(frozen=True)
class LabeledItem:
    doc_id: str
    pair: AnnotatedPair
    profile: "object"  # HallucinationProfile; kept loose to avoid an import cycle


@dataclass(frozen=True)
class PoolState:
    """Disjoint unlabeled/labeled pools over one corpus.

    ``unlabeled`` preserves corpus order (deterministic tie-breaking
    downstream); ``labeled`` preserves annotation order.  Treated as a
    value: operations return new states.
    """

    unlabeled: tuple[str, ...]
    labeled: tuple[LabeledItem, ...] = ()
    total: int = field(default=-1)

    def __post_init__(self) -> None:
        if self.total < 0:
            object.__setattr__(self, "total", len(self.unlabeled) + len(self.labeled))
        labeled_ids = {item.doc_id for item in self.labeled}
        if len(labeled_ids) != len(self.labeled):
            raise PoolError("labeled pool contains a repeated id")
        if labeled_ids & set(self.unlabeled):
            raise PoolError("pools are not disjoint")
        if len(self.unlabeled) + len(self.labeled) != self.total:
            raise PoolError("pool sizes do not add up to total")

    @property
    def labeled_ids(self) -> tuple[str, ...]:
        return tuple(item.doc_id for item in self.labeled)


def init_pools(corpus: Corpus | Sequence[Document]) -> PoolState:
    """All documents start unlabeled; duplicates and empty corpora are rejected."""
    if not isinstance(corpus, Corpus):
        corpus = Corpus(list(corpus))
    return PoolState(unlabeled=corpus.ids, labeled=(), total=len(corpus))


def transfer(pool: PoolState, doc_id: str, pair: AnnotatedPair, profile) -> PoolState:
    """Move ``doc_id`` from the unlabeled pool into the labeled pool."""
    if doc_id not in pool.unlabeled:
        raise PoolError(f"document {doc_id!r} is not in the unlabeled pool")
    if pair.doc_id != doc_id:
        raise PoolError(f"annotated pair targets {pair.doc_id!r}, not {doc_id!r}")
    remaining = tuple(i for i in pool.unlabeled if i != doc_id)
    return PoolState(
        unlabeled=remaining,
        labeled=pool.labeled + (LabeledItem(doc_id, pair, profile),),
        total=pool.total,
    )


def load_corpus_jsonl(path: str | Path) -> Corpus:
    """Load a line-delimited JSON corpus.

    One object per line: ``{"id": str, "text": str, "gold_summary": str,
    "embedding": [float]?, "latent": [float]?}``.
    """
    docs: list[Document] = []
    golds: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise PoolError(f"{path}:{lineno}: invalid JSON ({exc})") from None
            for key in ("id", "text"):
                if key not in rec:
                    raise PoolError(f"{path}:{lineno}: missing required key {key!r}")
            emb = rec.get("embedding")
            latent = rec.get("latent")
            docs.append(
                Document(
                    id=str(rec["id"]),
                    text=str(rec["text"]),
                    embedding=tuple(float(x) for x in emb) if emb is not None else None,
                    latent=tuple(float(x) for x in latent) if latent is not None else None,
                )
            )
            if "gold_summary" in rec and rec["gold_summary"] is not None:
                golds[str(rec["id"])] = str(rec["gold_summary"])
    return Corpus(docs, golds)


def save_corpus_jsonl(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus in the same line-delimited JSON format ``load_corpus_jsonl`` reads."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            rec: dict = {"id": doc.id, "text": doc.text}
            gold = corpus.gold_summary(doc.id)
            if gold is not None:
                rec["gold_summary"] = gold
            if doc.embedding is not None:
                rec["embedding"] = list(doc.embedding)
            if doc.latent is not None:
                rec["latent"] = list(doc.latent)
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
