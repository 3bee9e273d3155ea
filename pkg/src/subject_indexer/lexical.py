"""Lexical matching backend.

Candidates are subjects whose normalized labels occur verbatim in the
document. Each candidate gets a handful of position and frequency features
that a small logistic model turns into a score.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import astuple, dataclass, replace
from typing import Iterable, Mapping

import numpy as np

from .analyzer import AnalyzerConfig, field_tokens
from .corpus import Corpus, document_text
from .exceptions import NoTrainingSignal
from .linear import logistic_loss_grad, sigmoid
from .suggestions import SuggestionList
from .vocabulary import SubjectVocabulary

FEATURE_NAMES = (
    "match_count",
    "first_position",
    "spread",
    "is_pref_label",
    "label_token_len",
    "subject_prior",
)
N_WEIGHTS = len(FEATURE_NAMES) + 1

LEARNING_RATE = 0.1
EPOCHS = 200
L2 = 1e-4


@dataclass(frozen=True)
class CandidateFeatures:
    match_count: int
    first_position: float
    spread: float
    is_pref_label: bool
    label_token_len: int
    subject_prior: float = 0.0

    def vector(self) -> np.ndarray:
        """Feature values followed by a constant 1 for the bias."""
        return np.array([*map(float, astuple(self)), 1.0])


def generate_candidates(
    text: str,
    vocab: SubjectVocabulary,
    language: str,
    priors: Mapping[str, float] | None = None,
) -> list[tuple[str, CandidateFeatures]]:
    """Find every subject whose label occurs as a contiguous token run.

    All occurrences of all of a subject's labels count towards
    ``match_count`` and the position features. ``is_pref_label`` and
    ``label_token_len`` describe the best match: preferred over alternate,
    then earliest. Matches never cross line (field) boundaries.
    """
    index = vocab.label_index.get(language)
    if not index:
        return []
    config = replace(vocab.analyzer, language=language)
    lengths = vocab.label_lengths[language]
    fields = field_tokens(text, config)
    n_tokens = sum(len(f) for f in fields)
    if n_tokens == 0:
        return []

    # subject id -> list of (offset, is_pref, label_len)
    hits: dict[str, list[tuple[int, bool, int]]] = {}
    offset = 0
    for tokens in fields:
        for i in range(len(tokens)):
            for length in lengths:
                if i + length > len(tokens):
                    break
                key = " ".join(tokens[i : i + length])
                for sid in index.get(key, ()):
                    is_pref = vocab.pref_key(sid, language) == key
                    hits.setdefault(sid, []).append((offset + i, is_pref, length))
        offset += len(tokens)

    priors = priors or {}
    candidates = []
    for sid in sorted(hits):
        occ = hits[sid]
        positions = [pos for pos, _, _ in occ]
        first, last = min(positions), max(positions)
        best = min(occ, key=lambda o: (not o[1], o[0]))
        candidates.append(
            (
                sid,
                CandidateFeatures(
                    match_count=len(occ),
                    first_position=first / n_tokens,
                    spread=(last - first) / n_tokens,
                    is_pref_label=best[1],
                    label_token_len=best[2],
                    subject_prior=float(priors.get(sid, 0.0)),
                ),
            )
        )
    return candidates


def loss_and_grad(weights, X, y, l2: float = L2):
    """Mean log-loss of the candidate scorer and its gradient (bias unpenalized)."""
    return logistic_loss_grad(weights, X, y, l2, bias_index=-1)


class LexicalModel:
    def __init__(
        self,
        feature_weights,
        analyzer: AnalyzerConfig,
        subject_prior: Mapping[str, float],
        language: str,
    ):
        self.feature_weights = np.asarray(feature_weights, dtype=np.float64)
        if self.feature_weights.shape != (N_WEIGHTS,):
            raise ValueError(f"expected {N_WEIGHTS} weights")
        self.analyzer = analyzer
        self.subject_prior = dict(subject_prior)
        self.language = language
        self._prepared: tuple[SubjectVocabulary, SubjectVocabulary] | None = None

    def prepare(self, vocab: SubjectVocabulary) -> SubjectVocabulary:
        """``vocab`` re-indexed with this model's analyzer (cached per vocabulary)."""
        cached = self._prepared
        if cached is not None and cached[0] is vocab:
            return cached[1]
        prepared = vocab.with_analyzer(replace(self.analyzer, language=vocab.analyzer.language))
        self._prepared = (vocab, prepared)
        return prepared

    def score(self, features: CandidateFeatures) -> float:
        return float(sigmoid(features.vector() @ self.feature_weights))

    def to_dict(self) -> dict:
        return {
            "feature_weights": self.feature_weights.tolist(),
            "analyzer": self.analyzer.to_dict(),
            "subject_prior": self.subject_prior,
            "language": self.language,
        }

    @classmethod
    def from_dict(cls, data: dict) -> LexicalModel:
        return cls(
            data["feature_weights"],
            AnalyzerConfig.from_dict(data["analyzer"]),
            data["subject_prior"],
            data["language"],
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False)

    @classmethod
    def load(cls, path) -> LexicalModel:
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def subject_priors(records: Iterable) -> dict[str, float]:
    records = list(records)
    counts: Counter[str] = Counter()
    for rec in records:
        counts.update(rec.subjects)
    n = len(records)
    return {sid: c / n for sid, c in sorted(counts.items())} if n else {}


def train_lexical(
    corpus: Corpus,
    vocab: SubjectVocabulary,
    language: str,
    analyzer: AnalyzerConfig | None = None,
    seed: int = 0,
    learning_rate: float = LEARNING_RATE,
    epochs: int = EPOCHS,
    l2: float = L2,
) -> LexicalModel:
    """Fit the candidate scorer with per-sample SGD.

    Every candidate of every training document of ``language`` is a
    sample, labelled 1 iff the subject is in the document's gold set.
    """
    analyzer = replace(analyzer or vocab.analyzer, language=language)
    records = [r for r in corpus if r.language == language and r.subjects]
    priors = subject_priors(records)
    model = LexicalModel(np.zeros(N_WEIGHTS), analyzer, priors, language)
    indexed = model.prepare(vocab)

    rows, labels = [], []
    for rec in records:
        for sid, feats in generate_candidates(document_text(rec), indexed, language, priors):
            rows.append(feats.vector())
            labels.append(1.0 if sid in rec.subjects else 0.0)
    if not rows:
        raise NoTrainingSignal(
            f"no vocabulary label occurs in any of the {len(records)} {language} training documents"
        )
    X = np.vstack(rows)
    y = np.asarray(labels)

    rng = np.random.default_rng(seed)
    w = np.zeros(N_WEIGHTS)
    penalty = np.ones(N_WEIGHTS)
    penalty[-1] = 0.0
    for _ in range(epochs):
        for i in rng.permutation(len(y)):
            x = X[i]
            z = float(x @ w)
            p = 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))
            w -= learning_rate * ((p - y[i]) * x + l2 * penalty * w)
    model.feature_weights = w
    return model


def suggest_lexical(
    model: LexicalModel,
    text: str,
    vocab: SubjectVocabulary,
    language: str | None = None,
    limit: int = 50,
) -> SuggestionList:
    language = language or model.language
    indexed = model.prepare(vocab)
    candidates = generate_candidates(text, indexed, language, model.subject_prior)
    if not candidates or limit <= 0:
        return SuggestionList(provenance="lexical")
    X = np.vstack([feats.vector() for _, feats in candidates])
    scores = sigmoid(X @ model.feature_weights)
    return SuggestionList.from_scores(
        {sid: float(s) for (sid, _), s in zip(candidates, scores)}, limit, "lexical"
    )
