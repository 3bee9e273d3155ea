"""Partitioned label tree classifier in the Bonsai style.

Labels are represented by the mean TF-IDF vector of their training
documents and clustered recursively with spherical k-means into a shallow,
wide tree. Every edge gets a logistic classifier; prediction is a beam
search that scores a leaf by the product of edge probabilities on its path.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .analyzer import AnalyzerConfig, Vectorizer, fit_vectorizer
from .corpus import Corpus, document_text
from .exceptions import IndexingError, NoTrainingSignal
from .linear import fit_edges, sigmoid
from .suggestions import SuggestionList
from .vocabulary import SubjectVocabulary

logger = logging.getLogger(__name__)

FANOUT = 100
MAX_DEPTH = 3
BEAM_WIDTH = 10
KMEANS_ITERATIONS = 25

EDGE_L2 = 1e-4
EDGE_LEARNING_RATE = 2.0
EDGE_ITERATIONS = 150


@dataclass
class TreeNode:
    children: list[int] = field(default_factory=list)
    subject: str | None = None

    @property
    def is_leaf(self) -> bool:
        return self.subject is not None


class LabelTree:
    """Nodes are stored in a flat list; node 0 is the root."""

    def __init__(self, nodes: Sequence[TreeNode], fanout: int, max_depth: int):
        self.nodes = list(nodes)
        self.fanout = fanout
        self.max_depth = max_depth

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    def internal_nodes(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if not n.is_leaf]

    def leaves(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if n.is_leaf]

    def subjects(self) -> list[str]:
        return [n.subject for n in self.nodes if n.is_leaf]

    def depth(self) -> int:
        def walk(i):
            node = self.nodes[i]
            return 0 if node.is_leaf else 1 + max((walk(c) for c in node.children), default=0)

        return walk(0)

    def paths(self) -> dict[str, list[int]]:
        """Subject -> node ids from the root down to its leaf."""
        out = {}
        stack = [(0, [0])]
        while stack:
            i, path = stack.pop()
            node = self.nodes[i]
            if node.is_leaf:
                out[node.subject] = path
            for c in node.children:
                stack.append((c, path + [c]))
        return out

    def dump(self) -> str:
        lines = []

        def walk(i, indent):
            node = self.nodes[i]
            label = node.subject if node.is_leaf else f"node {i} ({len(node.children)} children)"
            lines.append("  " * indent + label)
            for c in node.children:
                walk(c, indent + 1)

        walk(0, 0)
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "fanout": self.fanout,
            "max_depth": self.max_depth,
            "nodes": [{"children": n.children, "subject": n.subject} for n in self.nodes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> LabelTree:
        nodes = [TreeNode(list(n["children"]), n["subject"]) for n in data["nodes"]]
        return cls(nodes, data["fanout"], data["max_depth"])


def _normalize_rows(X: sp.csr_matrix) -> sp.csr_matrix:
    norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
    norms[norms == 0] = 1.0
    return sp.csr_matrix(sp.diags(1.0 / norms) @ X)


def spherical_kmeans(
    X: sp.csr_matrix, k: int, rng: np.random.Generator, iterations: int = KMEANS_ITERATIONS
) -> list[np.ndarray]:
    """Cluster unit-norm rows by cosine similarity.

    Centers are seeded k-means++ style with cosine distance. Returns the
    nonempty clusters as arrays of row indices, in center order. Cluster
    sizes are not balanced.
    """
    m = X.shape[0]
    k = min(k, m)
    first = int(rng.integers(m))
    centers = [first]
    closest = 1.0 - (X @ X[first].T).toarray().ravel()
    for _ in range(1, k):
        weights = np.clip(closest, 0.0, None) ** 2
        weights[centers] = 0.0
        total = weights.sum()
        if total <= 0:
            remaining = np.setdiff1d(np.arange(m), centers)
            pick = int(rng.choice(remaining))
        else:
            pick = int(rng.choice(m, p=weights / total))
        centers.append(pick)
        closest = np.minimum(closest, 1.0 - (X @ X[pick].T).toarray().ravel())

    C = X[centers].toarray()
    assign = None
    for _ in range(iterations):
        sims = np.asarray(X @ C.T)
        new_assign = np.argmax(sims, axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(k):
            members = assign == j
            if members.any():
                center = np.asarray(X[members].sum(axis=0)).ravel()
                norm = np.linalg.norm(center)
                C[j] = center / norm if norm > 0 else center
    return [np.flatnonzero(assign == j) for j in range(k) if np.any(assign == j)]


def build_label_tree(
    label_reps: Mapping[str, sp.spmatrix | np.ndarray],
    fanout: int = FANOUT,
    max_depth: int = MAX_DEPTH,
    seed: int = 0,
) -> LabelTree:
    """Recursively partition labels until a set fits under one node.

    A label set becomes the leaf children of a single node when it has at
    most ``fanout`` members or the node sits at depth ``max_depth - 1``.
    """
    if not label_reps:
        raise ValueError("no labels to build a tree from")
    if fanout < 2 or max_depth < 1:
        raise ValueError("fanout must be >= 2 and max_depth >= 1")
    ids = sorted(label_reps)
    R = _normalize_rows(sp.csr_matrix(sp.vstack([sp.csr_matrix(label_reps[i]) for i in ids])))
    rng = np.random.default_rng(seed)
    nodes: list[TreeNode] = []

    def new_node(subject=None) -> int:
        nodes.append(TreeNode(subject=subject))
        return len(nodes) - 1

    def build(indices: np.ndarray, depth: int) -> int:
        node = new_node()
        if len(indices) <= fanout or depth + 1 >= max_depth:
            nodes[node].children = [new_node(ids[i]) for i in indices]
            return node
        clusters = spherical_kmeans(R[indices], fanout, rng)
        if len(clusters) < 2:
            # identical representations: split evenly to guarantee progress
            clusters = np.array_split(np.arange(len(indices)), fanout)
        children = []
        for cluster in clusters:
            members = indices[cluster]
            if len(members) == 1:
                children.append(new_node(ids[members[0]]))
            else:
                children.append(build(members, depth + 1))
        nodes[node].children = children
        return node

    build(np.arange(len(ids)), 0)
    return LabelTree(nodes, fanout, max_depth)


class TreeModel:
    """A label tree plus one logistic classifier per edge.

    ``edge_weights[node]`` is an (n_features x n_children) sparse matrix
    and ``edge_bias[node]`` the matching bias vector, for each internal node.
    """

    def __init__(
        self,
        tree: LabelTree,
        edge_weights: Mapping[int, sp.spmatrix],
        edge_bias: Mapping[int, np.ndarray],
        vectorizer: Vectorizer,
    ):
        self.tree = tree
        self.vectorizer = vectorizer
        self.edge_weights = {int(i): sp.csc_matrix(w) for i, w in edge_weights.items()}
        self.edge_bias = {int(i): np.asarray(b, dtype=np.float64) for i, b in edge_bias.items()}
        for i in tree.internal_nodes():
            w = self.edge_weights[i]
            if w.shape != (vectorizer.n_features, len(tree.nodes[i].children)):
                raise ValueError(f"edge weights of node {i} have shape {w.shape}")

    def edge_probabilities(self, x: sp.csr_matrix, node: int) -> np.ndarray:
        z = (x @ self.edge_weights[node]).toarray().ravel() + self.edge_bias[node]
        return sigmoid(z)

    def save(self, path) -> None:
        """Write ``<path>.json`` (tree, vectorizer, biases) and ``<path>.npz`` (weights)."""
        path = Path(path)
        internal = self.tree.internal_nodes()
        blocks = [self.edge_weights[i] for i in internal]
        sp.save_npz(path.with_suffix(".npz"), sp.csc_matrix(sp.hstack(blocks)))
        meta = {
            "tree": self.tree.to_dict(),
            "vectorizer": self.vectorizer.to_dict(),
            "internal": internal,
            "bias": [self.edge_bias[i].tolist() for i in internal],
        }
        path.with_suffix(".json").write_text(json.dumps(meta, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path) -> TreeModel:
        path = Path(path)
        meta = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
        tree = LabelTree.from_dict(meta["tree"])
        W = sp.load_npz(path.with_suffix(".npz")).tocsc()
        weights, bias = {}, {}
        col = 0
        for i, b in zip(meta["internal"], meta["bias"]):
            width = len(tree.nodes[i].children)
            weights[i] = W[:, col : col + width]
            bias[i] = np.array(b)
            col += width
        return cls(tree, weights, bias, Vectorizer.from_dict(meta["vectorizer"]))


def label_representations(
    X: sp.csr_matrix,
    doc_labels: Sequence[frozenset[str]],
    vectorizer: Vectorizer,
    vocab: SubjectVocabulary | None,
) -> dict[str, sp.csr_matrix]:
    rows_by_label: dict[str, list[int]] = {}
    for row, labels in enumerate(doc_labels):
        for sid in labels:
            rows_by_label.setdefault(sid, []).append(row)
    language = vectorizer.config.language
    reps = {}
    for sid in sorted(rows_by_label):
        rows = rows_by_label[sid]
        rep = None
        if len(rows) == 1 and vocab is not None and sid in vocab:
            label = vocab.pref_label(sid, language)
            if label:
                label_vec = vectorizer.transform(label)
                if label_vec.nnz:
                    rep = label_vec
        if rep is None:
            rep = sp.csr_matrix(X[rows].mean(axis=0))
        reps[sid] = rep
    return reps


def train_tree(
    corpus: Corpus,
    vocab: SubjectVocabulary | None,
    analyzer: AnalyzerConfig,
    fanout: int = FANOUT,
    max_depth: int = MAX_DEPTH,
    seed: int = 0,
    l2: float = EDGE_L2,
    learning_rate: float = EDGE_LEARNING_RATE,
    iterations: int = EDGE_ITERATIONS,
) -> TreeModel:
    """Fit vectorizer, label tree and edge classifiers on gold-labelled records.

    The classifier of the edge into child ``c`` of node ``n`` sees the
    documents routed to ``n`` (those with a gold label below ``n``);
    positives are the ones with a gold label below ``c``.
    """
    if len(corpus) == 0:
        raise IndexingError("cannot train on an empty corpus")
    records = [r for r in corpus if r.subjects]
    if not records:
        raise NoTrainingSignal("corpus has no records with gold subjects")
    texts = [document_text(r) for r in records]
    vectorizer = fit_vectorizer(texts, analyzer)
    X = vectorizer.transform_many(texts)
    doc_labels = [r.subjects for r in records]

    reps = label_representations(X, doc_labels, vectorizer, vocab)
    tree = build_label_tree(reps, fanout, max_depth, seed)
    paths = tree.paths()
    active = [set().union(*(paths[s] for s in labels)) for labels in doc_labels]

    weights, bias = {}, {}
    for node in tree.internal_nodes():
        routed = [d for d, nodes in enumerate(active) if node in nodes]
        children = tree.nodes[node].children
        Y = np.array([[c in active[d] for c in children] for d in routed], dtype=np.float64)
        weights[node], bias[node] = fit_edges(X[routed], Y, l2, learning_rate, iterations)
    logger.info(
        "trained label tree: %d leaves, %d internal nodes, depth %d",
        len(tree.leaves()),
        len(tree.internal_nodes()),
        tree.depth(),
    )
    return TreeModel(tree, weights, bias, vectorizer)


def suggest_tree(
    model: TreeModel, text: str, beam_width: int = BEAM_WIDTH, limit: int = 50
) -> SuggestionList:
    """Beam search keeping the ``beam_width`` best internal nodes per level."""
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    x = model.vectorizer.transform(text)
    nodes = model.tree.nodes
    leaf_scores: dict[str, float] = {}
    frontier = [(1.0, 0)]
    while frontier:
        expanded = []
        for score, node in frontier:
            probs = model.edge_probabilities(x, node)
            for child, p in zip(nodes[node].children, probs):
                if nodes[child].is_leaf:
                    leaf_scores[nodes[child].subject] = score * float(p)
                else:
                    expanded.append((score * float(p), child))
        expanded.sort(key=lambda t: (-t[0], t[1]))
        frontier = expanded[:beam_width]
    return SuggestionList.from_scores(leaf_scores, limit, "tree")
