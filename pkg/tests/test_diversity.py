import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hadas.diversity import (
    HallucinationProfile,
    diversity_score,
    diversity_scores,
    jsd,
    profile_from_values,
    to_profile,
)
from hadas.scoring import NormalizedScores


def kl2(p, q):
    # term-by-term KL oracle, independent of the entropy-form implementation
    total = 0.0
    for a, b in zip(p, q):
        if a > 0.0:
            total += a * math.log2(a / b)
    return total


def jsd_oracle(p, q):
    m = [(a + b) / 2.0 for a, b in zip(p, q)]
    return 0.5 * kl2(p, m) + 0.5 * kl2(q, m)


def simplex(dim=3):
    return (
        st.lists(st.floats(min_value=1e-6, max_value=1.0), min_size=dim, max_size=dim)
        .map(lambda v: tuple(x / sum(v) for x in v))
    )


def test_to_profile_already_normalized():
    profile = to_profile(NormalizedScores(0.2, 0.3, 0.5))
    assert profile.p == pytest.approx((0.2, 0.3, 0.5), abs=1e-8)


def test_to_profile_all_zero_gives_uniform():
    profile = to_profile(NormalizedScores(0.0, 0.0, 0.0))
    assert profile.p == pytest.approx((1 / 3, 1 / 3, 1 / 3))


def test_to_profile_zero_survives_smoothing():
    profile = to_profile(NormalizedScores(0.5, 0.5, 0.0))
    assert profile.p == pytest.approx((0.5, 0.5, 0.0), abs=1e-8)


def test_profile_validates_simplex():
    with pytest.raises(ValueError):
        HallucinationProfile((0.5, 0.6, 0.2))
    with pytest.raises(ValueError):
        HallucinationProfile((-0.1, 0.6, 0.5))


def test_jsd_identity_is_zero():
    for p in [(1 / 3, 1 / 3, 1 / 3), (0.7, 0.2, 0.1), (1.0, 0.0, 0.0)]:
        assert jsd(p, p) == 0.0


def test_jsd_disjoint_support_is_exactly_one():
    assert jsd((1.0, 0.0, 0.0), (0.0, 1.0, 0.0)) == 1.0
    assert jsd((0.0, 0.0, 1.0), (0.5, 0.5, 0.0)) == 1.0


def test_jsd_worked_example_frozen():
    # value frozen from the term-by-term KL oracle
    value = jsd((0.5, 0.5, 0.0), (0.25, 0.25, 0.5))
    assert value == pytest.approx(0.3112781244591328, abs=1e-9)
    assert value == pytest.approx(jsd_oracle((0.5, 0.5, 0.0), (0.25, 0.25, 0.5)), abs=1e-12)


def test_jsd_length_mismatch():
    with pytest.raises(ValueError):
        jsd((0.5, 0.5), (0.3, 0.3, 0.4))


@given(simplex(), simplex())
def test_jsd_symmetric_bounded_matches_oracle(p, q):
    a, b = jsd(p, q), jsd(q, p)
    assert a == pytest.approx(b, abs=1e-12)
    assert 0.0 <= a <= 1.0
    assert a == pytest.approx(jsd_oracle(p, q), abs=1e-9)


@given(simplex())
def test_jsd_zero_iff_equal(p):
    assert jsd(p, p) == 0.0
    shifted = tuple(x / sum((p[0] + 0.5, *p[1:])) for x in (p[0] + 0.5, *p[1:]))
    assert jsd(p, shifted) > 0.0


def test_diversity_empty_labeled_is_zero():
    cand = profile_from_values((0.9, 0.05, 0.05))
    assert diversity_score(cand, []) == 0.0


def test_diversity_single_identical_label():
    cand = profile_from_values((0.2, 0.3, 0.5))
    assert diversity_score(cand, [cand]) == 0.0


def test_diversity_mean_of_identity_and_disjoint():
    cand = HallucinationProfile((1.0, 0.0, 0.0))
    labeled = [HallucinationProfile((1.0, 0.0, 0.0)), HallucinationProfile((0.0, 1.0, 0.0))]
    assert diversity_score(cand, labeled) == pytest.approx(0.5)


@given(simplex(), simplex(), st.integers(min_value=1, max_value=6))
def test_diversity_k_copies_equals_single_jsd(p, q, k):
    cand = HallucinationProfile(p)
    labeled = [HallucinationProfile(q)] * k
    assert diversity_score(cand, labeled) == pytest.approx(jsd(p, q), abs=1e-12)


@given(simplex(), st.lists(simplex(), min_size=1, max_size=5))
def test_appending_candidate_profile_never_increases_diversity(p, labeled):
    cand = HallucinationProfile(p)
    pool = [HallucinationProfile(q) for q in labeled]
    before = diversity_score(cand, pool)
    after = diversity_score(cand, pool + [cand])
    assert after <= before + 1e-12


@given(st.lists(simplex(), min_size=1, max_size=6), st.lists(simplex(), min_size=1, max_size=6))
def test_vectorized_diversity_matches_scalar(cands, labeled):
    cand_profiles = [HallucinationProfile(p) for p in cands]
    labeled_profiles = [HallucinationProfile(q) for q in labeled]
    batch = diversity_scores(cand_profiles, labeled_profiles)
    scalar = [diversity_score(c, labeled_profiles) for c in cand_profiles]
    assert np.allclose(batch, scalar, atol=1e-12)
