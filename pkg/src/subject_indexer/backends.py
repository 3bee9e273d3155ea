"""Uniform backend interface and the registry of backend kinds.

A backend is constructed for one project, trained on a corpus, persisted
under the project's data directory and asked for suggestions per text.
Further backends (for example a transformer ranker) register a subclass
with :func:`register_backend` and become usable from configuration files.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from pathlib import Path
from typing import TYPE_CHECKING, Any, ClassVar

from .corpus import Corpus
from .ensemble import (
    CANDIDATE_POOL,
    NeuralAdjuster,
    NeuralConfig,
    suggest_neural,
    train_neural,
    weighted_average,
)
from .exceptions import IndexingError
from .lexical import EPOCHS, L2, LEARNING_RATE, LexicalModel, suggest_lexical, train_lexical
from .suggestions import SuggestionList
from .tree import (
    BEAM_WIDTH,
    EDGE_ITERATIONS,
    EDGE_L2,
    EDGE_LEARNING_RATE,
    FANOUT,
    MAX_DEPTH,
    TreeModel,
    suggest_tree,
    train_tree,
)

if TYPE_CHECKING:
    from .project import Project


class ModelNotTrained(IndexingError):
    pass


class Backend(ABC):
    kind: ClassVar[str]
    # parameter name -> (type, default)
    params: ClassVar[dict[str, tuple[type, Any]]] = {}
    is_ensemble: ClassVar[bool] = False
    trainable: ClassVar[bool] = True

    def __init__(self, project: Project):
        self.project = project
        self.settings = {
            name: project.config.params.get(name, default) for name, (_, default) in self.params.items()
        }

    @property
    def model_dir(self) -> Path:
        return self.project.model_dir

    @abstractmethod
    def train(self, corpus: Corpus) -> None: ...

    @abstractmethod
    def suggest(self, text: str, limit: int) -> SuggestionList: ...

    @abstractmethod
    def save(self) -> None: ...

    @abstractmethod
    def load(self) -> None: ...

    def is_trained(self) -> bool:
        return any(self.model_dir.glob("model.*"))


BACKENDS: dict[str, type[Backend]] = {}


def register_backend(cls: type[Backend]) -> type[Backend]:
    BACKENDS[cls.kind] = cls
    return cls


@register_backend
class LexicalBackend(Backend):
    kind = "lexical"
    params = {"seed": (int, 0), "epochs": (int, EPOCHS), "learning_rate": (float, LEARNING_RATE), "l2": (float, L2)}

    model: LexicalModel | None = None

    def train(self, corpus):
        self.model = train_lexical(
            corpus,
            self.project.vocabulary,
            self.project.config.language,
            self.project.config.analyzer,
            seed=self.settings["seed"],
            learning_rate=self.settings["learning_rate"],
            epochs=self.settings["epochs"],
            l2=self.settings["l2"],
        )

    def suggest(self, text, limit):
        if self.model is None:
            self.load()
        return suggest_lexical(self.model, text, self.project.vocabulary, self.project.config.language, limit)

    def save(self):
        self.model_dir.mkdir(parents=True, exist_ok=True)
        self.model.save(self.model_dir / "model.json")

    def load(self):
        path = self.model_dir / "model.json"
        if not path.exists():
            raise ModelNotTrained(f"project {self.project.id!r} has no trained model at {path}")
        self.model = LexicalModel.load(path)


@register_backend
class TreeBackend(Backend):
    kind = "tree"
    params = {
        "fanout": (int, FANOUT),
        "max_depth": (int, MAX_DEPTH),
        "beam_width": (int, BEAM_WIDTH),
        "seed": (int, 0),
        "l2": (float, EDGE_L2),
        "learning_rate": (float, EDGE_LEARNING_RATE),
        "iterations": (int, EDGE_ITERATIONS),
    }

    model: TreeModel | None = None

    def train(self, corpus):
        self.model = train_tree(
            corpus,
            self.project.vocabulary,
            self.project.config.analyzer,
            fanout=self.settings["fanout"],
            max_depth=self.settings["max_depth"],
            seed=self.settings["seed"],
            l2=self.settings["l2"],
            learning_rate=self.settings["learning_rate"],
            iterations=self.settings["iterations"],
        )

    def suggest(self, text, limit):
        if self.model is None:
            self.load()
        return suggest_tree(self.model, text, self.settings["beam_width"], limit)

    def save(self):
        self.model_dir.mkdir(parents=True, exist_ok=True)
        self.model.save(self.model_dir / "model")

    def load(self):
        if not (self.model_dir / "model.json").exists():
            raise ModelNotTrained(f"project {self.project.id!r} has no trained model in {self.model_dir}")
        self.model = TreeModel.load(self.model_dir / "model")


class _EnsembleBase(Backend):
    is_ensemble = True

    def member_lists(self, text: str) -> list[SuggestionList]:
        return [m.suggest(text, CANDIDATE_POOL) for m in self.project.members()]


@register_backend
class SimpleEnsembleBackend(_EnsembleBase):
    kind = "simple_ensemble"
    trainable = False

    def train(self, corpus):
        raise IndexingError(f"simple ensemble {self.project.id!r} has nothing to train; use hyperopt for weights")

    def suggest(self, text, limit):
        return weighted_average(self.member_lists(text), self.project.config.weights, limit)

    def save(self):
        pass

    def load(self):
        pass

    def is_trained(self):
        return all(m.is_trained() for m in self.project.members())


@register_backend
class NeuralEnsembleBackend(_EnsembleBase):
    kind = "neural_ensemble"
    params = {
        "hidden": (int, NeuralConfig.hidden),
        "epochs": (int, NeuralConfig.epochs),
        "learning_rate": (float, NeuralConfig.learning_rate),
        "seed": (int, NeuralConfig.seed),
        "candidates": (int, NeuralConfig.candidates),
    }

    adjuster: NeuralAdjuster | None = None

    def train(self, corpus):
        config = NeuralConfig(**self.settings)
        members = [lambda text, m=m: m.suggest(text, config.candidates) for m in self.project.members()]
        self.adjuster = train_neural(config, members, corpus)

    def suggest(self, text, limit):
        if self.adjuster is None:
            self.load()
        return suggest_neural(self.adjuster, self.member_lists(text), limit)

    def save(self):
        self.model_dir.mkdir(parents=True, exist_ok=True)
        self.adjuster.save(self.model_dir / "model.json")

    def load(self):
        path = self.model_dir / "model.json"
        if not path.exists():
            raise ModelNotTrained(f"project {self.project.id!r} has no trained model at {path}")
        self.adjuster = NeuralAdjuster.load(path)
