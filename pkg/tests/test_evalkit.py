"""Evaluation toolkit: BLEU, confusion metrics, pair files, suite runs."""
from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tabletalk import evalkit
from tabletalk.evalkit import Confusion, EvalPair

from .conftest import packaged_csv
from .oracles import oracle_bleu, oracle_metrics


# -- tokenization -------------------------------------------------------------

def test_tokenize_sql() -> None:
    assert evalkit.tokenize_sql("SELECT a, b FROM t WHERE a >= 2") == [
        "select", "a", ",", "b", "from", "t", "where", "a", ">=", "2"]
    assert evalkit.tokenize_sql("a<=b != c") == ["a", "<=", "b", "!=", "c"]
    assert evalkit.tokenize_sql("") == []


# -- BLEU ----------------------------------------------------------------------

def test_bleu_identity_is_exactly_one() -> None:
    for sql in ("SELECT a FROM t",
                "SELECT a, b FROM t WHERE a > 1 ORDER BY b DESC LIMIT 5",
                "x"):
        assert evalkit.bleu(sql, sql) == 1.0


def test_bleu_hand_counted_pair() -> None:
    # candidate 4 tokens, reference 6: all n-gram precisions are 1 so the
    # score is exactly the brevity penalty exp(1 - 6/4)
    cand = "select a from t"
    ref = "select a from t limit 5"
    expected = math.exp(1.0 - 6 / 4)
    assert evalkit.bleu(cand, ref) == pytest.approx(0.6065, abs=1e-4)
    assert evalkit.bleu(cand, ref) == pytest.approx(expected, abs=1e-12)


def test_bleu_empty_inputs() -> None:
    assert evalkit.bleu("", "") == 1.0
    assert evalkit.bleu("", "a") == 0.0
    assert evalkit.bleu("a", "") == 0.0


def test_bleu_disjoint_is_tiny() -> None:
    assert evalkit.bleu("alpha beta", "gamma delta") < 1e-6


def test_bleu_order_adapts_to_short_statements() -> None:
    # two-token statements compare with bigram order, not padded zeros
    assert evalkit.bleu("a b", "a b") == 1.0
    assert evalkit.bleu("a", "a") == 1.0


def test_bleu_case_insensitive() -> None:
    assert evalkit.bleu("SELECT A FROM T", "select a from t") == 1.0


def test_bleu_matches_oracle_on_random_statements() -> None:
    rng = random.Random(11)
    vocab = ["select", "a", "b", "from", "t", "where", ">", "1", ",",
             "order", "by", "desc", "limit", "5"]
    for _ in range(300):
        cand = " ".join(rng.choices(vocab, k=rng.randint(1, 12)))
        ref = " ".join(rng.choices(vocab, k=rng.randint(1, 12)))
        assert evalkit.bleu(cand, ref) == pytest.approx(
            oracle_bleu(cand, ref), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=40), st.text(max_size=40))
def test_bleu_bounded_and_symmetric_identity(a: str, b: str) -> None:
    score = evalkit.bleu(a, b)
    assert 0.0 <= score <= 1.0
    assert evalkit.bleu(a, a) == 1.0


def test_classify_match_boundary_inclusive() -> None:
    assert evalkit.classify_match("select a from t", "select a from t")
    # brevity exp(-0.5) = 0.6065 >= 0.5
    assert evalkit.classify_match("select a from t",
                                  "select a from t limit 5")
    assert not evalkit.classify_match("alpha", "omega")
    # exact threshold counts as a match
    assert evalkit.classify_match("x", "x", threshold=1.0)


# -- metrics --------------------------------------------------------------------

def test_paper_scale_validity_metrics() -> None:
    metrics = evalkit.metrics_from_confusion(Confusion(660, 0, 5, 0))
    assert metrics.accuracy == pytest.approx(0.9925, abs=5e-5)
    assert metrics.precision == pytest.approx(1.0000, abs=5e-5)
    assert metrics.recall == pytest.approx(0.9925, abs=5e-5)
    assert metrics.f1 == pytest.approx(0.9962, abs=5e-5)
    assert metrics.undefined == ()


def test_zero_denominators_yield_zero_and_are_named() -> None:
    empty = evalkit.metrics_from_confusion(Confusion(0, 0, 0, 0))
    assert (empty.accuracy, empty.precision, empty.recall, empty.f1) == \
        (0.0, 0.0, 0.0, 0.0)
    assert empty.undefined == ("accuracy", "precision", "recall", "f1")

    no_tp = evalkit.metrics_from_confusion(Confusion(0, 0, 5, 0))
    assert no_tp.undefined == ("precision", "f1")
    assert no_tp.recall == 0.0


def test_metrics_match_oracle_on_random_confusions() -> None:
    rng = random.Random(3)
    for _ in range(200):
        tp, fp, fn, tn = (rng.randint(0, 20) for _ in range(4))
        got = evalkit.metrics_from_confusion(Confusion(tp, fp, fn, tn))
        want = oracle_metrics(tp, fp, fn, tn)
        assert got.accuracy == pytest.approx(want["accuracy"], abs=1e-12)
        assert got.precision == pytest.approx(want["precision"], abs=1e-12)
        assert got.recall == pytest.approx(want["recall"], abs=1e-12)
        assert got.f1 == pytest.approx(want["f1"], abs=1e-12)


def test_positive_only_confusion() -> None:
    confusion = evalkit._positive_only_confusion([True, True, False, True])
    assert confusion == Confusion(tp=3, fp=0, fn=1, tn=0)


# -- pair files -------------------------------------------------------------------

GOOD_LINE = ('{"question": "q", "gold_sql": "SELECT a FROM t", '
             '"predicted_sql": "SELECT a FROM t"}')


def test_load_pairs_happy_path() -> None:
    text = GOOD_LINE + "\n\n" + GOOD_LINE.replace('"q"', '"q2"') + "\n"
    pairs = evalkit.load_pairs(text)
    assert len(pairs) == 2
    assert pairs[0].schema_ddl is None


def test_load_pairs_reports_line_numbers() -> None:
    with pytest.raises(evalkit.MalformedPairFile) as err:
        evalkit.load_pairs(GOOD_LINE + "\nnot json\n")
    assert "line 2" in str(err.value)

    with pytest.raises(evalkit.MalformedPairFile) as err:
        evalkit.load_pairs('{"question": "q", "gold_sql": "g"}')
    assert "predicted_sql" in str(err.value)

    with pytest.raises(evalkit.MalformedPairFile):
        evalkit.load_pairs('[1, 2]')

    with pytest.raises(evalkit.MalformedPairFile):
        evalkit.load_pairs(GOOD_LINE[:-1] + ', "schema_ddl": 5}')


def test_load_pairs_empty_input() -> None:
    with pytest.raises(evalkit.EmptyInput):
        evalkit.load_pairs("\n\n")


# -- suite runs --------------------------------------------------------------------

def test_run_eval_suite_small() -> None:
    pairs = [
        EvalPair("q1", "SELECT a FROM t", "SELECT a FROM t"),
        EvalPair("q2", "SELECT a FROM t", "SELECT b FROM"),  # invalid
        EvalPair("q3", "SELECT a FROM t ORDER BY a", "SELECT a FROM t"),
    ]
    summary = evalkit.run_eval_suite(pairs)
    assert summary.n_pairs == 3
    assert summary.n_syntactically_valid == 2
    assert summary.validity_metrics.accuracy == pytest.approx(2 / 3)
    assert summary.bleu_scores[0] == 1.0
    assert summary.bleu_threshold == 0.5
    payload = summary.to_dict()
    assert payload["n_pairs"] == 3
    assert "mean_bleu" in payload


def test_run_eval_suite_rejects_empty() -> None:
    with pytest.raises(evalkit.EmptyInput):
        evalkit.run_eval_suite([])


def test_render_summary_mentions_counts() -> None:
    pairs = [EvalPair("q", "SELECT a FROM t", "SELECT a FROM t")]
    text = evalkit.render_summary(evalkit.run_eval_suite(pairs))
    assert "pairs evaluated" in text
    assert "1" in text


# -- the bundled regression fixture --------------------------------------------------

@pytest.fixture(scope="module")
def fixture_pairs() -> list[EvalPair]:
    text = packaged_csv("eval_pairs_665.jsonl").decode("utf-8")
    return evalkit.load_pairs(text)


def test_fixture_shape(fixture_pairs) -> None:
    assert len(fixture_pairs) == 665
    from tabletalk import sqlkit
    invalid = [i for i, p in enumerate(fixture_pairs)
               if not sqlkit.validate(p.predicted_sql).valid]
    assert invalid == [33, 195, 283, 285, 295]
    # every gold statement parses
    assert all(sqlkit.validate(p.gold_sql).valid for p in fixture_pairs)


def test_fixture_reproduces_paper_scale_metrics(fixture_pairs) -> None:
    summary = evalkit.run_eval_suite(fixture_pairs)
    assert summary.n_pairs == 665
    assert summary.n_syntactically_valid == 660
    v = summary.validity_metrics
    assert v.accuracy == pytest.approx(0.9925, abs=5e-5)
    assert v.precision == pytest.approx(1.0000, abs=5e-5)
    assert v.recall == pytest.approx(0.9925, abs=5e-5)
    assert v.f1 == pytest.approx(0.9962, abs=5e-5)
    # frozen regression values for the BLEU half of the protocol
    assert summary.bleu_confusion == Confusion(tp=637, fp=0, fn=28, tn=0)
