import pytest

from subject_indexer.backends import BACKENDS, Backend, ModelNotTrained, register_backend
from subject_indexer.config import parse_config
from subject_indexer.corpus import Corpus, DocumentRecord
from subject_indexer.exceptions import IndexingError, NoTrainingSignal
from subject_indexer.project import ProjectRegistry, UnknownProject
from subject_indexer.suggestions import SuggestionList

VOCAB = "gnd:1\tKlima\tclimate\ngnd:2\tForst\tforestry\ngnd:3\tAcker\tagriculture\n"
CONFIG = """
[lex]
backend = lexical
language = en
vocab = vocab.tsv
[lex-core]
backend = lexical
language = en
vocab = vocab.tsv
vocab_variant = core
vocab_subset = core.txt
[tree]
backend = tree
language = en
vocab = vocab.tsv
[avg]
backend = simple_ensemble
language = en
sources = lex:0.5, tree:0.5
[neural]
backend = neural_ensemble
language = en
sources = lex:0.5, tree:0.5
epochs = 3
"""

TRAIN = Corpus(
    [
        DocumentRecord("d1", "en", "climate research", "", frozenset({"gnd:1"})),
        DocumentRecord("d2", "en", "forestry today", "climate", frozenset({"gnd:2"})),
        DocumentRecord("d3", "en", "agriculture and forestry", "", frozenset({"gnd:3", "gnd:2"})),
    ]
)


@pytest.fixture
def registry(tmp_path):
    (tmp_path / "vocab.tsv").write_text(VOCAB, encoding="utf-8")
    (tmp_path / "core.txt").write_text("gnd:1\ngnd:2\n", encoding="utf-8")
    return ProjectRegistry(parse_config(CONFIG, tmp_path), tmp_path / "data")


def test_vocabulary_variants(registry):
    assert len(registry.get("lex").vocabulary) == 3
    assert len(registry.get("lex-core").vocabulary) == 2
    assert registry.get("lex").vocabulary is registry.get("tree").vocabulary


def test_unknown_project(registry):
    with pytest.raises(UnknownProject):
        registry.get("missing")


def test_train_persist_and_reload(registry, tmp_path):
    for pid in ("lex", "tree", "neural"):
        registry.get(pid).train(TRAIN)
        assert registry.get(pid).is_trained()
    fresh = ProjectRegistry(registry.configs.values(), tmp_path / "data")
    for pid in ("lex", "tree", "avg", "neural"):
        a = registry.get(pid).suggest("forestry and climate", 10)
        b = fresh.get(pid).suggest("forestry and climate", 10)
        assert a == b and len(a) > 0


def test_untrained_and_untrainable(registry):
    with pytest.raises(ModelNotTrained):
        registry.get("lex").suggest("climate", 5)
    with pytest.raises(IndexingError):
        registry.get("avg").train(TRAIN)
    with pytest.raises(NoTrainingSignal):
        registry.get("tree").train(Corpus([DocumentRecord("x", "en", "climate")]))


def test_third_backend_kind_plugs_in(tmp_path):
    class Constant(Backend):
        kind = "constant-test"
        params = {"score": (float, 0.5)}

        def train(self, corpus):
            pass

        def suggest(self, text, limit):
            return SuggestionList.from_scores({"gnd:1": self.settings["score"]}, limit)

        def save(self):
            pass

        def load(self):
            pass

    register_backend(Constant)
    try:
        (tmp_path / "vocab.tsv").write_text(VOCAB, encoding="utf-8")
        text = CONFIG + "[const]\nbackend = constant-test\nlanguage = en\nvocab = vocab.tsv\nscore = 0.25\n"
        text += "[avg3]\nbackend = simple_ensemble\nlanguage = en\nsources = lex:0.4, tree:0.3, const:0.3\n"
        registry = ProjectRegistry(parse_config(text, tmp_path), tmp_path / "data")
        assert registry.get("const").suggest("anything", 5).scores() == {"gnd:1": 0.25}
        assert len(registry.get("avg3").members()) == 3
    finally:
        del BACKENDS["constant-test"]
