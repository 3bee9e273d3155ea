"""Text normalization and TF-IDF feature extraction shared by all backends."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .exceptions import EmptyFeatureSpace

_WORD_RE = re.compile(r"\w+")

NORMALIZERS = ("lowercase_only", "suffix_stemmer")

# longest suffix is tried first
_SUFFIXES = {
    "en": ("ing", "es", "ed", "s"),
    "de": ("en", "er", "e", "n", "s"),
}
_MIN_STEM = 3


@dataclass(frozen=True)
class AnalyzerConfig:
    language: str = "en"
    normalizer: str = "lowercase_only"
    min_token_len: int = 3
    ngram: int = 1
    min_df: int = 1

    def __post_init__(self):
        if self.normalizer not in NORMALIZERS:
            raise ValueError(f"unknown normalizer {self.normalizer!r}")
        if self.ngram not in (1, 2):
            raise ValueError("ngram must be 1 or 2")
        if self.min_token_len < 1:
            raise ValueError("min_token_len must be >= 1")
        if self.min_df < 1:
            raise ValueError("min_df must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> AnalyzerConfig:
        return cls(**data)


def _stem(token: str, language: str, min_len: int) -> str:
    suffixes = _SUFFIXES.get(language, ())
    floor = max(_MIN_STEM, min_len)
    # strip repeatedly until a fixed point so that stemming is idempotent
    changed = True
    while changed:
        changed = False
        for suffix in suffixes:
            if token.endswith(suffix):
                stem = token[: -len(suffix)]
                if len(stem) >= floor and any(c.isalpha() for c in stem):
                    token = stem
                    changed = True
                break
    return token


def tokenize(text: str, config: AnalyzerConfig) -> list[str]:
    """Split text into normalized tokens.

    Tokens are runs of word characters in the case-folded text. Tokens
    shorter than ``min_token_len`` or without any letter are dropped
    before the normalizer runs.
    """
    tokens = []
    for token in _WORD_RE.findall(text.casefold()):
        if len(token) < config.min_token_len or not any(c.isalpha() for c in token):
            continue
        if config.normalizer == "suffix_stemmer":
            token = _stem(token, config.language, config.min_token_len)
        tokens.append(token)
    return tokens


def normalize_label(label: str, config: AnalyzerConfig) -> str:
    return " ".join(tokenize(label, config))


def field_tokens(text: str, config: AnalyzerConfig) -> list[list[str]]:
    """Tokenize each line separately; line breaks separate fields."""
    return [tokenize(line, config) for line in text.split("\n")]


def extract_features(text: str, config: AnalyzerConfig) -> list[str]:
    features = []
    for tokens in field_tokens(text, config):
        features.extend(tokens)
        if config.ngram == 2:
            features.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
    return features


class Vectorizer:
    """TF-IDF vectorizer over unigram (and optionally bigram) features.

    Vectors are returned as 1 x n_features CSR matrices with unit L2 norm,
    or all zeros when no known feature occurs.
    """

    def __init__(self, features: Sequence[str], idf: Sequence[float], config: AnalyzerConfig):
        if len(features) != len(idf):
            raise ValueError("features and idf differ in length")
        self.config = config
        self.vocabulary_map = {f: i for i, f in enumerate(features)}
        self.idf = np.asarray(idf, dtype=np.float64)

    @property
    def n_features(self) -> int:
        return len(self.vocabulary_map)

    @property
    def features(self) -> list[str]:
        return sorted(self.vocabulary_map, key=self.vocabulary_map.__getitem__)

    def transform(self, text: str) -> sp.csr_matrix:
        return self.transform_many([text])

    def transform_many(self, texts: Iterable[str]) -> sp.csr_matrix:
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for text in texts:
            counts = Counter(
                self.vocabulary_map[f]
                for f in extract_features(text, self.config)
                if f in self.vocabulary_map
            )
            cols = sorted(counts)
            weights = np.array([counts[c] for c in cols], dtype=np.float64)
            weights *= self.idf[cols]
            norm = np.linalg.norm(weights)
            if norm > 0:
                weights /= norm
            indices.extend(cols)
            data.extend(weights.tolist())
            indptr.append(len(indices))
        return sp.csr_matrix(
            (np.array(data, dtype=np.float64), np.array(indices, dtype=np.int64), indptr),
            shape=(len(indptr) - 1, self.n_features),
        )

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "features": self.features,
            "idf": self.idf.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> Vectorizer:
        return cls(data["features"], data["idf"], AnalyzerConfig.from_dict(data["config"]))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def loads(cls, text: str) -> Vectorizer:
        return cls.from_dict(json.loads(text))


def fit_vectorizer(texts: Sequence[str], config: AnalyzerConfig) -> Vectorizer:
    """Fit document frequencies; keep features seen in at least min_df docs.

    idf(f) = ln((1 + N) / (1 + df(f))) + 1
    """
    if not texts:
        raise ValueError("cannot fit a vectorizer on an empty corpus")
    df: Counter[str] = Counter()
    for text in texts:
        df.update(set(extract_features(text, config)))
    n_docs = len(texts)
    kept = sorted(f for f, count in df.items() if count >= config.min_df)
    if not kept:
        raise EmptyFeatureSpace(
            f"no feature occurs in at least {config.min_df} of {n_docs} documents"
        )
    idf = [math.log((1 + n_docs) / (1 + df[f])) + 1.0 for f in kept]
    return Vectorizer(kept, idf, config)
