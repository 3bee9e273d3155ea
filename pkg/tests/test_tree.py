import numpy as np
import pytest
import scipy.sparse as sp

from subject_indexer.analyzer import AnalyzerConfig
from subject_indexer.corpus import Corpus, DocumentRecord, document_text
from subject_indexer.evaluation import evaluate_run
from subject_indexer.exceptions import IndexingError
from subject_indexer.fixtures import separable_fixture
from subject_indexer.linear import sigmoid
from subject_indexer.tree import LabelTree, TreeModel, build_label_tree, suggest_tree, train_tree


def reps(vectors):
    return {sid: sp.csr_matrix(np.asarray(v, dtype=float)) for sid, v in vectors.items()}


def test_single_label_tree():
    tree = build_label_tree(reps({"a": [1, 0]}))
    assert tree.nodes[0].children == [1]
    assert tree.nodes[1].subject == "a"


def test_one_level_when_labels_fit():
    tree = build_label_tree(reps({f"s{i}": np.eye(10)[i] for i in range(10)}), fanout=16)
    assert len(tree.nodes[0].children) == 10
    assert all(tree.nodes[c].is_leaf for c in tree.nodes[0].children)
    assert tree.depth() == 1


def test_orthogonal_groups_are_separated():
    rng = np.random.default_rng(0)
    vectors = {}
    for i in range(6):
        vectors[f"a{i}"] = np.concatenate([rng.uniform(0.5, 1, 4), np.zeros(4)])
        vectors[f"b{i}"] = np.concatenate([np.zeros(4), rng.uniform(0.5, 1, 4)])
    tree = build_label_tree(reps(vectors), fanout=2, max_depth=4, seed=1)
    groups = []
    for child in tree.nodes[0].children:
        below = {sid for sid, path in tree.paths().items() if child in path}
        groups.append({s[0] for s in below})
    assert sorted(map(sorted, groups)) == [["a"], ["b"]]


def test_depth_and_fanout_limits():
    rng = np.random.default_rng(2)
    vectors = {f"s{i:02d}": rng.uniform(0, 1, 6) for i in range(40)}
    tree = build_label_tree(reps(vectors), fanout=3, max_depth=3)
    assert tree.depth() <= 3
    assert sorted(tree.subjects()) == sorted(vectors)
    for i in tree.internal_nodes():
        assert len(tree.nodes[i].children) >= 1


def test_identical_representations_still_split():
    vectors = {f"s{i}": [1.0, 1.0] for i in range(9)}
    tree = build_label_tree(reps(vectors), fanout=3, max_depth=3)
    assert sorted(tree.subjects()) == sorted(vectors)
    assert len(tree.nodes[0].children) == 3


def test_tree_serialization():
    tree = build_label_tree(reps({f"s{i}": np.eye(5)[i] for i in range(5)}), fanout=2)
    again = LabelTree.from_dict(tree.to_dict())
    assert again.dump() == tree.dump()


@pytest.fixture(scope="module")
def separable():
    fx = separable_fixture(n_subjects=30, n_train=300, n_dev=60, seed=4)
    return fx, train_tree(fx.train, fx.vocab, AnalyzerConfig(language="en"), fanout=4, max_depth=3)


def test_multi_level_tree_learns_separable_fixture(separable):
    fx, model = separable
    assert model.tree.depth() > 1
    run = {r.id: suggest_tree(model, document_text(r)) for r in fx.dev}
    assert evaluate_run(run, fx.dev)["F1@5"] >= 0.9


def test_empty_text_uses_biases_only(separable):
    _, model = separable
    a = suggest_tree(model, "", beam_width=100, limit=100)
    b = suggest_tree(model, "", beam_width=100, limit=100)
    assert a == b
    # check one leaf against the product of bias-only probabilities
    sid, score = a.items[0]
    expected = 1.0
    for node, child in zip(model.tree.paths()[sid], model.tree.paths()[sid][1:]):
        j = model.tree.nodes[node].children.index(child)
        expected *= float(sigmoid(model.edge_bias[node][j]))
    assert score == pytest.approx(expected, rel=1e-12)


def test_limit_and_beam(separable):
    fx, model = separable
    text = document_text(fx.dev[0])
    assert len(suggest_tree(model, text, limit=5)) <= 5
    with pytest.raises(ValueError):
        suggest_tree(model, text, beam_width=0)


def test_save_load_round_trip(separable, tmp_path):
    fx, model = separable
    model.save(tmp_path / "model")
    again = TreeModel.load(tmp_path / "model")
    text = document_text(fx.dev[1])
    assert suggest_tree(again, text) == suggest_tree(model, text)


def test_unseen_subjects_have_no_leaf():
    corpus = Corpus(
        [
            DocumentRecord("d1", "en", "alpha words", "", frozenset({"gnd:1"})),
            DocumentRecord("d2", "en", "beta words", "", frozenset({"gnd:2"})),
        ]
    )
    model = train_tree(corpus, None, AnalyzerConfig())
    assert sorted(model.tree.subjects()) == ["gnd:1", "gnd:2"]
    assert "gnd:3" not in suggest_tree(model, "gamma words").ids()


def test_training_errors():
    with pytest.raises(IndexingError):
        train_tree(Corpus([]), None, AnalyzerConfig())
    with pytest.raises(IndexingError):
        train_tree(Corpus([DocumentRecord("d", "en", "text here")]), None, AnalyzerConfig())


def test_training_is_deterministic():
    fx = separable_fixture(n_subjects=12, n_train=80, n_dev=5, seed=9)
    a = train_tree(fx.train, fx.vocab, AnalyzerConfig(), fanout=3, seed=5)
    b = train_tree(fx.train, fx.vocab, AnalyzerConfig(), fanout=3, seed=5)
    assert a.tree.dump() == b.tree.dump()
    text = document_text(fx.dev[0])
    assert suggest_tree(a, text) == suggest_tree(b, text)
