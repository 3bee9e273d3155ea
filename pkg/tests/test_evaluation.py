import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_f1, brute_ndcg
from subject_indexer.corpus import Corpus, DocumentRecord
from subject_indexer.evaluation import evaluate_run, f1_at_k, ndcg_at_k, precision_recall_at_k
from subject_indexer.exceptions import IndexingError, ParseError
from subject_indexer.suggestions import SuggestionList, format_run, parse_run


def ranked(*ids):
    return SuggestionList.from_scores({sid: 1.0 - i / 100 for i, sid in enumerate(ids)})


def gold_corpus(*gold_sets):
    return Corpus(DocumentRecord(f"d{i}", "en", "t", "", frozenset(g)) for i, g in enumerate(gold_sets))


def test_f1_example():
    pred = ranked("A", "B", "D", "E", "F")
    p, r = precision_recall_at_k(pred, {"A", "B", "C"}, 5)
    assert p == pytest.approx(0.4) and r == pytest.approx(2 / 3)
    assert f1_at_k(pred, {"A", "B", "C"}, 5) == 0.5


def test_f1_edge_cases():
    assert f1_at_k(ranked("A", "B"), {"A", "B"}, 2) == 1.0
    assert f1_at_k(ranked("A"), set(), 5) == 0.0
    assert f1_at_k(SuggestionList(), {"A"}, 5) == 0.0


def test_short_prediction_not_penalized():
    # two suggestions, both correct: precision@5 is 1, not 0.4
    assert precision_recall_at_k(ranked("A", "B"), {"A", "B", "C"}, 5)[0] == 1.0


def test_ndcg_example():
    value = ndcg_at_k(ranked("A", "X", "B"), {"A", "B"}, 10)
    assert value == pytest.approx(1.5 / (1 + 1 / math.log2(3)), abs=1e-12)
    assert round(value, 4) == 0.9197
    assert ndcg_at_k(ranked("A", "B"), {"A", "B"}, 10) == 1.0
    assert ndcg_at_k(ranked("X", "Y"), {"A"}, 10) == 0.0
    assert ndcg_at_k(ranked("A"), set(), 10) == 0.0


def test_k_must_be_positive():
    with pytest.raises(ValueError):
        f1_at_k(ranked("A"), {"A"}, 0)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.sampled_from("ABCDEFGHIJKLMNOPQRST"), unique=True, max_size=20),
    st.sets(st.sampled_from("ABCDEFGHIJKLMNOPQRST"), max_size=20),
    st.integers(1, 25),
)
def test_metrics_agree_with_brute_force(ranking, gold, k):
    pred = ranked(*ranking)
    assert abs(f1_at_k(pred, gold, k) - brute_f1(ranking, gold, k)) <= 1e-9
    assert abs(ndcg_at_k(pred, gold, k) - brute_ndcg(ranking, gold, k)) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.sampled_from("ABCDEFGHIJ"), unique=True, max_size=10),
    st.sets(st.sampled_from("ABCDEFGHIJ"), min_size=1),
)
def test_recall_is_monotone(ranking, gold):
    recalls = [precision_recall_at_k(ranked(*ranking), gold, k)[1] for k in range(1, 12)]
    assert recalls == sorted(recalls)


def test_report_examples():
    report = evaluate_run({"d0": ranked("A", "B", "D", "E", "F")}, gold_corpus({"A", "B", "C"}))
    assert report["F1@5"] == 0.5
    assert report.n_documents == 1

    perfect = evaluate_run({"d0": ranked("A", "B"), "d1": ranked("C")}, gold_corpus({"A", "B"}, {"C"}))
    assert perfect["average_recall"] == 1.0

    half = evaluate_run({"d0": ranked("A"), "d1": ranked("X")}, gold_corpus({"A"}, {"B"}))
    assert half["average_recall"] == 0.5


def test_report_contents_and_warnings():
    report = evaluate_run({"d0": ranked("A"), "zz": ranked("A")}, gold_corpus({"A"}, {"B"}))
    names = set(report.per_metric)
    for k in range(5, 55, 5):
        assert {f"P@{k}", f"R@{k}", f"F1@{k}"} <= names
    assert {"F1@5", "nDCG@10", "average_recall"} <= names
    assert len(report.warnings) == 1 and "zz" in report.warnings[0]
    data = json.loads(report.to_json())
    assert data["n_documents"] == 2
    assert "average_recall" in report.format_table()
    assert all(0.0 <= v <= 1.0 for v in report.per_metric.values())


def test_custom_thresholds():
    report = evaluate_run({"d0": ranked("A", "B")}, gold_corpus({"A", "B"}), thresholds=[1, 2])
    assert report["R@1"] == 0.5 and report["R@2"] == 1.0
    assert report["average_recall"] == 0.75
    assert "F1@5" in report.per_metric


def test_document_order_does_not_matter():
    rng = random.Random(1)
    gold_sets = [set(rng.sample("ABCDEFGH", 3)) for _ in range(8)]
    run = {f"d{i}": ranked(*rng.sample("ABCDEFGH", 6)) for i in range(8)}
    forward = evaluate_run(run, gold_corpus(*gold_sets))
    records = list(gold_corpus(*gold_sets))
    backward = evaluate_run(dict(reversed(run.items())), Corpus(reversed(records)))
    for name, value in forward.per_metric.items():
        assert backward[name] == pytest.approx(value, abs=1e-12)


def test_empty_gold_corpus():
    with pytest.raises(IndexingError):
        evaluate_run({}, Corpus([]))


def test_run_round_trip_and_errors():
    run = {
        "d1": SuggestionList.from_scores({"gnd:1": 0.9, "gnd:2": 0.1 + 0.2}),
        "d2": SuggestionList.from_scores({"gnd:3": 1.6}),
    }
    text = format_run(run)
    assert text.splitlines()[0] == "d1\t1\tgnd:1\t0.9"
    assert parse_run(text.splitlines()) == run
    assert format_run(run, limit=1).count("d1") == 1

    with pytest.raises(ParseError) as err:
        parse_run(["d1\t1\tgnd:1\t0.5", "d1\t2\tgnd:2"])
    assert err.value.line == 2
    with pytest.raises(ParseError):
        parse_run(["d1\t1\tgnd:1\t0.5", "d1\t2\tgnd:1\t0.4"])


def test_suggestion_list_invariants():
    lst = SuggestionList((("b", 0.5), ("a", 0.5), ("c", 0.9)))
    assert lst.ids() == ["c", "a", "b"]
    with pytest.raises(ValueError):
        SuggestionList((("a", 0.1), ("a", 0.2)))
    assert SuggestionList.from_scores({"a": 1.0, "b": 0.5}, limit=0).items == ()
