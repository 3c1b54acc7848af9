import pytest

from hadas_scorer_bridge.scorers import (
    ScorerSet,
    StubContentVerifiabilityScorer,
    StubDiscourseScorer,
    StubSemanticFrameScorer,
    sentences,
    tokens,
)

DOC = "Heavy rains flooded the southern state. Officials reported evacuations on Thursday."


def test_document_prefix_summary_scores_perfect():
    summary = "Heavy rains flooded the southern state."
    sf, disc, cv = ScorerSet.stub().score(DOC, summary)
    assert (sf, disc, cv) == (1.0, 1.0, 1.0)


def test_unsupported_content_lowers_scores():
    supported = "Officials reported evacuations."
    fabricated = "A nationwide emergency was declared by parliament."
    set_ = ScorerSet.stub()
    for supported_score, fabricated_score in zip(set_.score(DOC, supported), set_.score(DOC, fabricated)):
        assert fabricated_score < supported_score


def test_scrambled_order_hurts_sf_more_than_cv():
    in_order = "heavy rains flooded the southern state"
    scrambled = "state southern the flooded rains heavy"
    set_ = ScorerSet.stub()
    sf_in, _, cv_in = set_.score(DOC, in_order)
    sf_scrambled, _, cv_scrambled = set_.score(DOC, scrambled)
    assert cv_scrambled == cv_in == 1.0  # same tokens, token precision unchanged
    assert sf_scrambled < sf_in  # relation-level stub sees broken bigrams


def test_discourse_stub_averages_per_sentence():
    summary = "Heavy rains flooded the southern state. Aliens landed quietly."
    per_sentence = StubDiscourseScorer().score(DOC, summary)
    full_support = StubDiscourseScorer().score(DOC, "Heavy rains flooded the southern state.")
    assert full_support == 1.0
    assert 0.0 < per_sentence < 1.0


def test_empty_summary_scores_zero():
    assert ScorerSet.stub().score(DOC, "") == (0.0, 0.0, 0.0)


def test_single_token_summary():
    assert StubSemanticFrameScorer().score(DOC, "rains") == 1.0
    assert StubSemanticFrameScorer().score(DOC, "volcano") == 0.0


def test_cv_is_token_precision():
    assert StubContentVerifiabilityScorer().score("a b c", "a z") == pytest.approx(0.5)


def test_tokenize_and_sentences():
    assert tokens("Hello, World!") == ["hello", "world"]
    assert sentences("One. Two! Three?") == ["One", "Two", "Three"]


def test_all_scores_in_unit_interval_on_varied_inputs():
    set_ = ScorerSet.stub()
    cases = [
        ("", ""),
        ("a", "a a a a"),
        (DOC, DOC),
        (DOC, "completely unrelated words only here"),
    ]
    for document, summary in cases:
        for value in set_.score(document, summary):
            assert 0.0 <= value <= 1.0
