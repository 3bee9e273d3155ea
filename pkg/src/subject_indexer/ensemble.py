"""Score fusion: weighted averaging, a learned score adjuster, and merging
of monolingual runs."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .corpus import Corpus, document_text
from .exceptions import IndexingError, NoTrainingSignal, SimplexViolation
from .linear import log_sigmoid, sigmoid
from .suggestions import SuggestionList

SIMPLEX_TOLERANCE = 1e-9
CANDIDATE_POOL = 100
MERGE_LIMIT = 50


def check_simplex(weights: Sequence[float], section: str | None = None) -> None:
    if any(w < 0 or math.isnan(w) for w in weights):
        raise SimplexViolation(f"negative weight in {list(weights)}", section, "weights")
    total = math.fsum(weights)
    if abs(total - 1.0) > SIMPLEX_TOLERANCE:
        raise SimplexViolation(f"weights sum to {total!r}, not 1", section, "weights")


@dataclass(frozen=True)
class EnsembleConfig:
    members: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if len(self.members) < 2:
            raise IndexingError("an ensemble needs at least two members")
        check_simplex([w for _, w in self.members])

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.members]

    @property
    def weights(self) -> list[float]:
        return [w for _, w in self.members]


def weighted_average(
    lists: Sequence[SuggestionList], weights: Sequence[float], limit: int = MERGE_LIMIT
) -> SuggestionList:
    """score(s) = sum_b weight_b * score_b(s), absent subjects scoring 0."""
    if len(lists) != len(weights):
        raise ValueError(f"{len(lists)} suggestion lists but {len(weights)} weights")
    check_simplex(weights)
    scores: dict[str, float] = {}
    for suggestions, weight in zip(lists, weights):
        if weight == 0:
            continue  # a zero-weight member must not add candidates
        for sid, score in suggestions:
            scores[sid] = scores.get(sid, 0.0) + weight * score
    return SuggestionList.from_scores(scores, limit, "weighted_average")


def merge_multilingual(
    run_de: SuggestionList, run_en: SuggestionList, limit: int = MERGE_LIMIT
) -> SuggestionList:
    """Sum the scores of two runs on language variants of one document.

    Summed scores are not renormalized and can exceed 1.
    """
    scores = run_de.scores()
    for sid, score in run_en:
        scores[sid] = scores.get(sid, 0.0) + score
    return SuggestionList.from_scores(scores, limit, "merged")


def merge_runs(
    run_a: Mapping[str, SuggestionList],
    run_b: Mapping[str, SuggestionList],
    limit: int = MERGE_LIMIT,
) -> dict[str, SuggestionList]:
    """Merge per document; documents in only one run pass through truncated."""
    empty = SuggestionList()
    doc_ids = list(dict.fromkeys([*run_a, *run_b]))
    return {d: merge_multilingual(run_a.get(d, empty), run_b.get(d, empty), limit) for d in doc_ids}


@dataclass(frozen=True)
class NeuralConfig:
    hidden: int = 100
    learning_rate: float = 0.01
    epochs: int = 10
    seed: int = 0
    candidates: int = CANDIDATE_POOL


def candidate_matrix(
    member_lists: Sequence[SuggestionList], pool: int = CANDIDATE_POOL
) -> tuple[list[str], np.ndarray]:
    """Union of each member's top ``pool`` subjects and their member scores.

    Returns sorted candidate ids and an (n_candidates x n_members) matrix,
    with 0 where a member did not suggest the subject.
    """
    tops = [dict(lst.items[:pool]) for lst in member_lists]
    ids = sorted(set().union(*tops)) if tops else []
    X = np.zeros((len(ids), len(member_lists)))
    for j, scores in enumerate(tops):
        for i, sid in enumerate(ids):
            X[i, j] = scores.get(sid, 0.0)
    return ids, X


class NeuralAdjuster:
    """One network shared by all subjects: member scores -> ReLU layer -> sigmoid."""

    def __init__(self, n_members: int, config: NeuralConfig = NeuralConfig()):
        self.n_members = n_members
        self.config = config
        rng = np.random.default_rng(config.seed)
        self.W1 = rng.normal(0.0, math.sqrt(2.0 / n_members), (n_members, config.hidden))
        self.b1 = np.zeros(config.hidden)
        self.w2 = rng.normal(0.0, math.sqrt(1.0 / config.hidden), config.hidden)
        self.b2 = 0.0
        self.loss_history: list[float] = []

    # parameters as one flat vector, for gradient checking and serialization
    def get_params(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.w2, [self.b2]])

    def set_params(self, theta) -> None:
        theta = np.asarray(theta, dtype=np.float64)
        m, h = self.n_members, self.config.hidden
        self.W1 = theta[: m * h].reshape(m, h).copy()
        self.b1 = theta[m * h : m * h + h].copy()
        self.w2 = theta[m * h + h : m * h + 2 * h].copy()
        self.b2 = float(theta[-1])

    def _logits(self, X):
        A = np.maximum(X @ self.W1 + self.b1, 0.0)
        return A, A @ self.w2 + self.b2

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return sigmoid(self._logits(X)[1])

    def loss_and_grad(self, X, y) -> tuple[float, np.ndarray]:
        """Mean binary cross-entropy over rows of X and its flat gradient."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64)
        n = len(y)
        A, z = self._logits(X)
        loss = -np.sum(y * log_sigmoid(z) + (1 - y) * log_sigmoid(-z)) / n
        dz = (sigmoid(z) - y) / n
        g_w2 = A.T @ dz
        g_b2 = dz.sum()
        dA = np.outer(dz, self.w2) * (A > 0)
        g_W1 = X.T @ dA
        g_b1 = dA.sum(axis=0)
        return float(loss), np.concatenate([g_W1.ravel(), g_b1, g_w2, [g_b2]])

    def adjust(self, member_lists: Sequence[SuggestionList], limit: int = MERGE_LIMIT) -> SuggestionList:
        return suggest_neural(self, member_lists, limit)

    def to_dict(self) -> dict:
        return {
            "n_members": self.n_members,
            "config": asdict(self.config),
            "params": self.get_params().tolist(),
            "loss_history": self.loss_history,
        }

    @classmethod
    def from_dict(cls, data: dict) -> NeuralAdjuster:
        adjuster = cls(data["n_members"], NeuralConfig(**data["config"]))
        adjuster.set_params(data["params"])
        adjuster.loss_history = list(data.get("loss_history", []))
        return adjuster

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f)

    @classmethod
    def load(cls, path) -> NeuralAdjuster:
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def _mean_loss(adjuster: NeuralAdjuster, batches) -> float:
    return float(np.mean([adjuster.loss_and_grad(X, y)[0] for X, y in batches]))


def train_neural_on_lists(
    member_lists_per_doc: Sequence[Sequence[SuggestionList]],
    gold_sets: Sequence[frozenset[str]],
    config: NeuralConfig = NeuralConfig(),
    epochs: int | None = None,
) -> NeuralAdjuster:
    """Plain SGD on binary cross-entropy, one document's candidates per step.

    ``loss_history`` holds the mean per-document loss before training and
    after each epoch.
    """
    epochs = config.epochs if epochs is None else epochs
    if not member_lists_per_doc:
        raise NoTrainingSignal("no development documents")
    n_members = len(member_lists_per_doc[0])
    batches = []
    for lists, gold in zip(member_lists_per_doc, gold_sets):
        if len(lists) != n_members:
            raise ValueError("every document needs one suggestion list per member")
        ids, X = candidate_matrix(lists, config.candidates)
        if ids:
            batches.append((X, np.array([sid in gold for sid in ids], dtype=np.float64)))
    if not batches:
        raise NoTrainingSignal("members produced no candidates on the development corpus")

    adjuster = NeuralAdjuster(n_members, config)
    rng = np.random.default_rng(config.seed)
    adjuster.loss_history.append(_mean_loss(adjuster, batches))
    for _ in range(epochs):
        for i in rng.permutation(len(batches)):
            X, y = batches[i]
            _, grad = adjuster.loss_and_grad(X, y)
            adjuster.set_params(adjuster.get_params() - config.learning_rate * grad)
        adjuster.loss_history.append(_mean_loss(adjuster, batches))
    return adjuster


def train_neural(
    config: NeuralConfig,
    members: Sequence[Callable[[str], SuggestionList]],
    dev_corpus: Corpus,
    epochs: int | None = None,
) -> NeuralAdjuster:
    """Train an adjuster on the members' suggestions for a development corpus.

    ``members`` are callables mapping document text to a suggestion list.
    """
    records = [r for r in dev_corpus if r.subjects]
    if not records:
        raise NoTrainingSignal("development corpus has no gold subjects")
    lists = [[member(document_text(r)) for member in members] for r in records]
    return train_neural_on_lists(lists, [r.subjects for r in records], config, epochs)


def suggest_neural(
    adjuster: NeuralAdjuster, member_lists: Sequence[SuggestionList], limit: int = MERGE_LIMIT
) -> SuggestionList:
    if len(member_lists) != adjuster.n_members:
        raise ValueError(f"expected {adjuster.n_members} member lists, got {len(member_lists)}")
    ids, X = candidate_matrix(member_lists, adjuster.config.candidates)
    if not ids:
        return SuggestionList(provenance="neural")
    scores = adjuster.predict(X)
    return SuggestionList.from_scores(dict(zip(ids, scores.tolist())), limit, "neural")
