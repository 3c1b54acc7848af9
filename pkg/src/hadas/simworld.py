"""Seeded synthetic environment: corpus generator, score model, learner.

Each document carries a latent per-type difficulty vector; a simulated
learner carries a per-type competence vector.  Scores follow the
linear-saturating form ``clamp(c * (1 - d) + sigma * g)`` and finetuning
moves competence by ``eta * (1 - c) * d``, so annotating a document
teaches most about the error types it actually exhibits.  Every draw is
tied to a named stream, so corpus, noise and selection randomness never
interact.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from .loop import Learner
from .pool import Corpus, Document, AnnotatedPair, Summary
from .scoring import RawScores, Scorer
from .seeds import rng_for


class WorldGenerationError(RuntimeError):
    """The configured world cannot satisfy the test/val filtering protocol."""


# acceptance thresholds for test/val documents, on the [0, 1] score scale
# (the 60/40 thresholds of the 0-100 protocol)
FILTER_MAX_EXPECTED = {"sf": 0.4, "disc": 0.4, "cv": 0.6}
FILTER_MIN_ACCEPT_RATE = 0.001


@dataclass(frozen=True)
class DocLatent:
    """Per-type difficulty of one document, each component in [0, 1]."""

    d: tuple[float, float, float]

    def __post_init__(self) -> None:
        if any(not 0.0 <= x <= 1.0 for x in self.d):
            raise ValueError(f"difficulties must be in [0, 1], got {self.d!r}")

    def __iter__(self):
        return iter(self.d)

    @classmethod
    def coerce(cls, value) -> "DocLatent":
        if isinstance(value, cls):
            return value
        if value is None:
            raise ValueError("document has no latent difficulty attached")
        return cls(tuple(float(x) for x in value))


@dataclass(frozen=True)
class SimLearner:
    """Per-type competence state of the simulated learner."""

    c: tuple[float, float, float] = (0.5, 0.5, 0.5)
    eta: float = 0.15

    def __post_init__(self) -> None:
        if any(not 0.0 <= x <= 1.0 for x in self.c):
            raise ValueError(f"competences must be in [0, 1], got {self.c!r}")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"learning rate must be in (0, 1], got {self.eta!r}")


@dataclass(frozen=True)
class WorldConfig:
    """Knobs of the synthetic world.

    Without ``dominance``, per-type difficulties are independent Betas
    parameterized by mean and a shared concentration (``alpha = mean * k``,
    ``beta = (1 - mean) * k``), optionally tied by a Gaussian copula.

    With ``dominance`` set to a type index, each document instead gets one
    *primary error type*: hard in it (``specialist_difficulty_mean``) and
    easier in the rest.  The dominant type is the primary type for most
    documents; the specialist fraction and the non-primary mean are solved
    so the per-type marginal means land exactly on
    ``dominant_difficulty_mean`` / ``other_difficulty_mean``.  This models
    a world where one hallucination type is far more common than the
    others, which is what makes greedy selection collapse onto it.
    """

    n_train: int = 200
    n_test: int = 40
    n_val: int = 20
    difficulty_means: tuple[float, float, float] = (0.35, 0.35, 0.35)
    concentration: float = 12.0
    dominance: int | None = None
    dominant_difficulty_mean: float = 0.8
    other_difficulty_mean: float = 0.3
    specialist_difficulty_mean: float = 0.95
    difficulty_correlation: float = 0.0
    noise_sigma: float = 0.02
    learning_rate_eta: float = 0.15
    init_competence: tuple[float, float, float] = (0.5, 0.5, 0.5)
    seed: int = 0
    doc_tokens: int = 24
    gold_tokens: int = 8

    def __post_init__(self) -> None:
        for name in ("n_train", "n_test", "n_val"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if not 0.0 < self.learning_rate_eta <= 1.0:
            raise ValueError("learning_rate_eta must be in (0, 1]")
        if self.concentration <= 0:
            raise ValueError("concentration must be positive")
        if not -0.49 <= self.difficulty_correlation <= 0.99:
            raise ValueError("difficulty_correlation must be in [-0.49, 0.99]")
        if self.dominance is not None:
            if not 0 <= self.dominance <= 2:
                raise ValueError("dominance must be a type index in 0..2")
            if self.difficulty_correlation != 0.0:
                raise ValueError("difficulty_correlation applies to the independent world only")
            self.mixture()  # validates solvability
        for m in self.effective_means():
            if not 0.0 < m < 1.0:
                raise ValueError("difficulty means must be strictly inside (0, 1)")

    def effective_means(self) -> tuple[float, float, float]:
        """Per-type marginal difficulty means."""
        if self.dominance is None:
            return self.difficulty_means
        means = [self.other_difficulty_mean] * 3
        means[self.dominance] = self.dominant_difficulty_mean
        return tuple(means)

    def mixture(self) -> tuple[float, float]:
        """Solve (minor-specialist fraction, non-primary mean) for the
        dominance mixture from the marginal mean constraints."""
        hi = self.specialist_difficulty_mean
        dom, oth = self.dominant_difficulty_mean, self.other_difficulty_mean
        if not hi > dom:
            raise ValueError("specialist_difficulty_mean must exceed dominant_difficulty_mean")
        lo = oth - (hi - dom) / 2.0
        minor_frac = (hi - dom) / (2.0 * (hi - lo))
        if not 0.0 < lo < 1.0:
            raise ValueError(
                f"dominance mixture is unsolvable: non-primary mean {lo!r} out of (0, 1)"
            )
        if not 0.0 < minor_frac < 0.5:
            raise ValueError(
                f"dominance mixture is unsolvable: minor fraction {minor_frac!r} out of (0, 0.5)"
            )
        return minor_frac, lo


def sim_generate_scores(
    learner: SimLearner,
    latent: DocLatent,
    noise: Sequence[float] = (0.0, 0.0, 0.0),
    noise_sigma: float = 0.0,
) -> RawScores:
    """Score model: per type, ``clamp(c * (1 - d) + sigma * g)``."""
    values = [
        min(1.0, max(0.0, c * (1.0 - d) + noise_sigma * g))
        for c, d, g in zip(learner.c, latent.d, noise)
    ]
    return RawScores(*values)


def sim_finetune(learner: SimLearner, latent: DocLatent) -> SimLearner:
    """Competence update: per type, ``c + eta * (1 - c) * d``.

    Competence grows most on the error types the annotated sample actually
    exhibits, and saturates at 1.
    """
    updated = tuple(
        min(1.0, c + learner.eta * (1.0 - c) * d) for c, d in zip(learner.c, latent.d)
    )
    return replace(learner, c=updated)


def _expected_initial_scores(cfg: WorldConfig, d: np.ndarray) -> np.ndarray:
    c0 = np.asarray(cfg.init_competence)
    return c0 * (1.0 - d)


def _passes_filter(cfg: WorldConfig, d: np.ndarray) -> bool:
    sf, disc, cv = _expected_initial_scores(cfg, d)
    return (
        sf < FILTER_MAX_EXPECTED["sf"]
        and disc < FILTER_MAX_EXPECTED["disc"]
        and cv < FILTER_MAX_EXPECTED["cv"]
    )


def _beta_params(mean: float, concentration: float) -> tuple[float, float]:
    return mean * concentration, (1.0 - mean) * concentration


def _draw_latents(cfg: WorldConfig, rng: np.random.Generator, n: int) -> np.ndarray:
    if cfg.dominance is not None:
        minor_frac, lo = cfg.mixture()
        mix = [minor_frac] * 3
        mix[cfg.dominance] = 1.0 - 2.0 * minor_frac
        primary = rng.choice(3, size=n, p=mix)
        a_lo, b_lo = _beta_params(lo, cfg.concentration)
        a_hi, b_hi = _beta_params(cfg.specialist_difficulty_mean, cfg.concentration)
        d = rng.beta(a_lo, b_lo, size=(n, 3))
        d[np.arange(n), primary] = rng.beta(a_hi, b_hi, size=n)
        return d

    means = np.asarray(cfg.difficulty_means)
    alphas = means * cfg.concentration
    betas = (1.0 - means) * cfg.concentration
    rho = cfg.difficulty_correlation
    if rho == 0.0:
        return rng.beta(alphas, betas, size=(n, 3))
    # Gaussian copula with equicorrelation, pushed through the Beta quantile
    from scipy.stats import beta as beta_dist, norm as norm_dist

    cov = np.full((3, 3), rho)
    np.fill_diagonal(cov, 1.0)
    z = rng.multivariate_normal(np.zeros(3), cov, size=n, method="cholesky")
    u = norm_dist.cdf(z)
    return beta_dist.ppf(u, alphas, betas)


def _make_documents(
    split: str, latents: np.ndarray, embeddings: np.ndarray, cfg: WorldConfig
) -> Corpus:
    docs: list[Document] = []
    golds: dict[str, str] = {}
    for i, (d, emb) in enumerate(zip(latents, embeddings)):
        doc_id = f"{split}-{i:04d}"
        tokens = [f"{split[0]}{i}t{j}" for j in range(cfg.doc_tokens)]
        gold = tokens[:: max(1, cfg.doc_tokens // cfg.gold_tokens)][: cfg.gold_tokens]
        docs.append(
            Document(
                id=doc_id,
                text=" ".join(tokens),
                latent=DocLatent(tuple(float(x) for x in d)),
                embedding=tuple(float(x) for x in emb),
            )
        )
        golds[doc_id] = " ".join(gold)
    return Corpus(docs, golds)


def _embeddings_for(latents: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    extra = rng.normal(0.0, 0.25, size=(latents.shape[0], 5))
    emb = np.concatenate([latents, extra], axis=1)
    return emb / np.linalg.norm(emb, axis=1, keepdims=True)


def generate_corpus(cfg: WorldConfig) -> tuple[Corpus, Corpus, Corpus]:
    """Generate (train, test, val) corpora, fully determined by the seed.

    Train documents are drawn straight from the difficulty distribution;
    test/val documents are rejection-sampled until their expected initial
    scores sit below the hallucination-proneness thresholds.
    """
    rng = rng_for(cfg.seed, "corpus")
    train_latents = _draw_latents(cfg, rng, cfg.n_train)

    quota = cfg.n_test + cfg.n_val
    max_draws = max(10_000, int(np.ceil(quota / FILTER_MIN_ACCEPT_RATE)))
    accepted: list[np.ndarray] = []
    draws = 0
    while len(accepted) < quota and draws < max_draws:
        batch = _draw_latents(cfg, rng, min(512, max_draws - draws))
        draws += len(batch)
        for d in batch:
            if _passes_filter(cfg, d):
                accepted.append(d)
                if len(accepted) == quota:
                    break
    if len(accepted) < quota:
        rate = len(accepted) / draws if draws else 0.0
        raise WorldGenerationError(
            f"test/val filter acceptance rate {rate:.5f} is below "
            f"{FILTER_MIN_ACCEPT_RATE} after {draws} draws; expected initial scores "
            f"(init competence {cfg.init_competence}, difficulty means "
            f"{cfg.effective_means()}) rarely satisfy "
            f"sf < {FILTER_MAX_EXPECTED['sf']}, disc < {FILTER_MAX_EXPECTED['disc']}, "
            f"cv < {FILTER_MAX_EXPECTED['cv']}"
        )
    test_latents = np.asarray(accepted[: cfg.n_test])
    val_latents = np.asarray(accepted[cfg.n_test :])

    train = _make_documents("train", train_latents, _embeddings_for(train_latents, rng), cfg)
    test = _make_documents("test", test_latents, _embeddings_for(test_latents, rng), cfg)
    val = _make_documents("val", val_latents, _embeddings_for(val_latents, rng), cfg)
    return train, test, val


def _standard_normals(noise_seed: int, doc_id: str, generation_round: int) -> np.ndarray:
    # hash-keyed so a pair's noise never depends on batch order or pool
    # composition, and frozen summaries keep their scores across rounds
    key = f"{noise_seed}|{doc_id}|{generation_round}".encode("utf-8")
    digest = hashlib.sha256(key).digest()
    ints = np.frombuffer(digest[:24], dtype="<u8")
    uniforms = (ints.astype(np.float64) + 0.5) * 2.0**-64
    return ndtri(uniforms)


class SimulatedLearner(Learner):
    """Learner contract over a competence vector.

    Generated summaries recover a competence-weighted prefix of the gold
    tokens (plumbing for the quality metric only); finetuning applies the
    competence update with the annotated document's latent difficulty.
    """

    objective = "competence-update"

    def __init__(
        self,
        corpora: Sequence[Corpus],
        eta: float = 0.15,
        init_competence: Sequence[float] = (0.5, 0.5, 0.5),
    ):
        self._latents: dict[str, DocLatent] = {}
        self._golds: dict[str, str] = {}
        for corpus in corpora:
            for doc in corpus:
                self._latents[doc.id] = DocLatent.coerce(doc.latent)
                gold = corpus.gold_summary(doc.id)
                if gold is not None:
                    self._golds[doc.id] = gold
        self.state = SimLearner(c=tuple(float(x) for x in init_competence), eta=eta)

    def generate(self, doc: Document, generation_round: int = 0) -> Summary:
        latent = DocLatent.coerce(doc.latent)
        quality = float(
            np.mean([c * (1.0 - d) for c, d in zip(self.state.c, latent.d)])
        )
        gold_tokens = self._golds.get(doc.id, "").split()
        k = int(round(quality * len(gold_tokens)))
        tokens = gold_tokens[:k] + [f"f{j}" for j in range(len(gold_tokens) - k)]
        return Summary(
            doc_id=doc.id, text=" ".join(tokens), generation_round=generation_round
        )

    def finetune(self, pair: AnnotatedPair) -> None:
        try:
            latent = self._latents[pair.doc_id]
        except KeyError:
            raise ValueError(f"unknown document {pair.doc_id!r} in finetune") from None
        self.state = sim_finetune(self.state, latent)

    def snapshot(self) -> SimLearner:
        return self.state

    def restore(self, snap: SimLearner) -> None:
        self.state = snap


class SimScorer(Scorer):
    """Scorer contract over the simulation's score model.

    Noise draws are keyed by (document id, generation round), so scoring
    is pure with respect to its inputs and the learner's current state.
    """

    def __init__(self, learner: SimulatedLearner, noise_seed: int, noise_sigma: float = 0.05):
        self._learner = learner
        self._noise_seed = noise_seed
        self._sigma = noise_sigma

    def score_pairs(self, pairs):
        out = []
        for doc, summary in pairs:
            latent = DocLatent.coerce(doc.latent)
            g = _standard_normals(self._noise_seed, doc.id, summary.generation_round)
            out.append(
                sim_generate_scores(self._learner.state, latent, g, self._sigma).as_tuple()
            )
        return out
