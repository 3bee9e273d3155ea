import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subject_indexer.analyzer import (
    AnalyzerConfig,
    Vectorizer,
    extract_features,
    fit_vectorizer,
    tokenize,
)
from subject_indexer.exceptions import EmptyFeatureSpace

EN = AnalyzerConfig(language="en")


def test_tokenize_examples():
    assert tokenize("Climate-Change affects us", EN) == ["climate", "change", "affects"]
    assert tokenize("", EN) == []
    assert tokenize("AI in 2024", EN) == []


def test_suffix_stemmer():
    en = AnalyzerConfig(language="en", normalizer="suffix_stemmer")
    assert tokenize("models modelling", en) == ["model", "modell"]
    de = AnalyzerConfig(language="de", normalizer="suffix_stemmer")
    # short remainders are kept whole
    assert tokenize("Kinder Tee", de) == ["kind", "tee"]


@settings(max_examples=200, deadline=None)
@given(
    st.text(alphabet=st.sampled_from("abcdeghinrstuäöüß -.\n0123ABE"), max_size=60),
    st.sampled_from(["lowercase_only", "suffix_stemmer"]),
    st.sampled_from(["de", "en"]),
    st.integers(1, 4),
)
def test_tokenize_is_idempotent(text, normalizer, language, min_len):
    config = AnalyzerConfig(language=language, normalizer=normalizer, min_token_len=min_len)
    once = tokenize(text, config)
    assert tokenize(" ".join(once), config) == once


def test_idf_and_min_df():
    texts = ["alpha beta", "alpha gamma", "delta"]
    vec = fit_vectorizer(texts, AnalyzerConfig(min_df=2))
    assert vec.features == ["alpha"]
    assert vec.idf[0] == pytest.approx(math.log(4 / 3) + 1, abs=1e-12)
    assert round(float(vec.idf[0]), 4) == 1.2877


def test_bigrams():
    config = AnalyzerConfig(ngram=2, min_token_len=1)
    vec = fit_vectorizer(["a b"], config)
    assert set(vec.features) == {"a", "b", "a b"}


def test_bigrams_do_not_cross_lines():
    config = AnalyzerConfig(ngram=2, min_token_len=1)
    assert extract_features("a b\nc", config) == ["a", "b", "a b", "c"]


def test_empty_feature_space():
    with pytest.raises(EmptyFeatureSpace):
        fit_vectorizer(["alpha", "beta", "gamma"], AnalyzerConfig(min_df=5))


def test_transform_norms():
    vec = Vectorizer(["alpha", "beta"], [1.0, 1.0], EN)
    assert vec.transform("zzz qqq").nnz == 0
    x = vec.transform("alpha").toarray().ravel()
    assert x.tolist() == [1.0, 0.0]
    x = vec.transform("alpha beta").toarray().ravel()
    assert np.allclose(x, [1 / math.sqrt(2)] * 2)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(["alpha", "beta", "gamma", "delta", "zzz", "x"]), max_size=12))
def test_transform_norm_is_zero_or_one(words):
    vec = fit_vectorizer(["alpha beta", "gamma", "delta alpha"], EN)
    norm = np.linalg.norm(vec.transform(" ".join(words)).toarray())
    assert norm == 0.0 or abs(norm - 1.0) < 1e-12


def test_vectorizer_serialization():
    vec = fit_vectorizer(["alpha beta", "beta gamma"], AnalyzerConfig(ngram=2))
    again = Vectorizer.loads(vec.dumps())
    assert again.features == vec.features
    assert np.array_equal(again.idf, vec.idf)
    assert again.config == vec.config
    assert (again.transform("alpha beta") != vec.transform("alpha beta")).nnz == 0


def test_config_validation():
    with pytest.raises(ValueError):
        AnalyzerConfig(normalizer="porter")
    with pytest.raises(ValueError):
        AnalyzerConfig(ngram=3)
