"""Sample-averaged ranking metrics for subject suggestions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Collection, Mapping, Sequence

from .corpus import Corpus
from .exceptions import IndexingError
from .suggestions import EMPTY, SuggestionList

DEFAULT_THRESHOLDS = tuple(range(5, 55, 5))


def _top_ids(pred, k: int) -> list[str]:
    if isinstance(pred, SuggestionList):
        return pred.ids()[:k]
    return list(pred)[:k]


def precision_recall_at_k(pred, gold: Collection[str], k: int) -> tuple[float, float]:
    """Precision uses min(k, len(pred)) as denominator, so short lists are
    not penalized for the slots they leave empty."""
    if k < 1:
        raise ValueError("k must be >= 1")
    top = _top_ids(pred, k)
    gold = set(gold)
    hits = sum(1 for sid in top if sid in gold)
    precision = hits / len(top) if top else 0.0
    recall = hits / len(gold) if gold else 0.0
    return precision, recall


def f1_at_k(pred, gold: Collection[str], k: int) -> float:
    p, r = precision_recall_at_k(pred, gold, k)
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def ndcg_at_k(pred, gold: Collection[str], k: int) -> float:
    """Binary-relevance nDCG; 0.0 when there is no gold subject."""
    if k < 1:
        raise ValueError("k must be >= 1")
    gold = set(gold)
    if not gold:
        return 0.0
    dcg = sum(
        1.0 / math.log2(i + 2) for i, sid in enumerate(_top_ids(pred, k)) if sid in gold
    )
    idcg = sum(1.0 / math.log2(i + 2) for i in range(min(k, len(gold))))
    return dcg / idcg


@dataclass
class EvaluationReport:
    per_metric: dict[str, float]
    thresholds: list[int]
    n_documents: int
    warnings: list[str] = field(default_factory=list)

    def __getitem__(self, name: str) -> float:
        return self.per_metric[name]

    def to_dict(self) -> dict:
        return {
            "n_documents": self.n_documents,
            "thresholds": list(self.thresholds),
            "metrics": dict(self.per_metric),
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def format_table(self) -> str:
        width = max(len(name) for name in self.per_metric)
        lines = [f"{'documents':<{width}}  {self.n_documents}"]
        lines += [f"{name:<{width}}  {value:.4f}" for name, value in self.per_metric.items()]
        return "\n".join(lines)


def evaluate_run(
    run: Mapping[str, SuggestionList],
    gold: Corpus,
    thresholds: Sequence[int] = DEFAULT_THRESHOLDS,
) -> EvaluationReport:
    """Average per-document metrics over the documents of ``gold``.

    Gold documents missing from ``run`` count as empty predictions; run
    documents absent from ``gold`` are reported as warnings and ignored.
    """
    if len(gold) == 0:
        raise IndexingError("cannot evaluate against an empty gold corpus")
    thresholds = sorted(set(thresholds))
    if not thresholds or thresholds[0] < 1:
        raise ValueError("thresholds must be positive integers")
    gold_ids = set(gold.ids())
    warnings = [f"document {d!r} is not in the gold corpus" for d in run if d not in gold_ids]

    extra_f1_5 = 5 not in thresholds
    sums: dict[str, float] = {"F1@5": 0.0, "nDCG@10": 0.0}
    for k in thresholds:
        for prefix in ("P", "R", "F1"):
            sums[f"{prefix}@{k}"] = 0.0
    for rec in gold:
        pred = run.get(rec.id, EMPTY)
        if extra_f1_5:
            sums["F1@5"] += f1_at_k(pred, rec.subjects, 5)
        sums["nDCG@10"] += ndcg_at_k(pred, rec.subjects, 10)
        for k in thresholds:
            p, r = precision_recall_at_k(pred, rec.subjects, k)
            sums[f"P@{k}"] += p
            sums[f"R@{k}"] += r
            sums[f"F1@{k}"] += 2 * p * r / (p + r) if p + r else 0.0

    n = len(gold)
    metrics = {name: total / n for name, total in sums.items()}
    metrics["average_recall"] = sum(metrics[f"R@{k}"] for k in thresholds) / len(thresholds)
    return EvaluationReport(metrics, list(thresholds), n, warnings)
