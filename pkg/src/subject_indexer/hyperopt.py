"""Random search over ensemble weights on a development set."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .corpus import Corpus, document_text
from .ensemble import CANDIDATE_POOL, weighted_average
from .evaluation import ndcg_at_k
from .exceptions import IndexingError
from .suggestions import SuggestionList

OBJECTIVE_K = 10


@dataclass
class Trial:
    number: int
    weights: tuple[float, ...]
    score: float


@dataclass
class HyperoptResult:
    weights: tuple[float, ...]
    score: float
    trials: list[Trial] = field(default_factory=list)


def mean_ndcg(
    member_lists_per_doc: Sequence[Sequence[SuggestionList]],
    gold_sets: Sequence[frozenset[str]],
    weights: Sequence[float],
    k: int = OBJECTIVE_K,
) -> float:
    total = 0.0
    for lists, gold in zip(member_lists_per_doc, gold_sets):
        total += ndcg_at_k(weighted_average(lists, weights, k), gold, k)
    return total / len(gold_sets)


def sample_simplex(rng: np.random.Generator, n: int) -> tuple[float, ...]:
    """Uniform draw from the probability simplex via normalized exponentials."""
    draws = rng.exponential(size=n)
    weights = draws / draws.sum()
    # push rounding error into the largest weight so the sum is exact
    weights[np.argmax(weights)] += 1.0 - weights.sum()
    return tuple(float(w) for w in weights)


def optimize_weights_on_lists(
    member_lists_per_doc: Sequence[Sequence[SuggestionList]],
    gold_sets: Sequence[frozenset[str]],
    trials: int = 100,
    seed: int = 0,
    log: Callable[[Trial], None] | None = None,
) -> HyperoptResult:
    """Evaluate ``trials`` random weight vectors; the first best one wins."""
    if not gold_sets:
        raise IndexingError("empty development corpus")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_members = len(member_lists_per_doc[0])
    rng = np.random.default_rng(seed)
    history = []
    best: Trial | None = None
    for number in range(1, trials + 1):
        weights = sample_simplex(rng, n_members)
        trial = Trial(number, weights, mean_ndcg(member_lists_per_doc, gold_sets, weights))
        history.append(trial)
        if log is not None:
            log(trial)
        if best is None or trial.score > best.score:
            best = trial
    return HyperoptResult(best.weights, best.score, history)


def optimize_weights(
    members: Sequence[Callable[[str], SuggestionList]],
    dev_corpus: Corpus,
    trials: int = 100,
    seed: int = 0,
    log: Callable[[Trial], None] | None = None,
) -> HyperoptResult:
    """Member suggestions are computed once per document; trials only re-fuse."""
    records = [r for r in dev_corpus if r.subjects]
    if not records:
        raise IndexingError("development corpus has no documents with gold subjects")
    lists = [[m(document_text(r)).top(CANDIDATE_POOL) for m in members] for r in records]
    return optimize_weights_on_lists(lists, [r.subjects for r in records], trials, seed, log)
