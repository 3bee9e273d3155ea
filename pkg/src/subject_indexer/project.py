"""Runtime projects: a configuration bound to a data directory."""

from __future__ import annotations

import logging
from functools import cached_property
from pathlib import Path
from typing import Iterable

from .backends import BACKENDS, Backend
from .config import ProjectConfig
from .corpus import Corpus
from .exceptions import ConfigError, NoTrainingSignal
from .suggestions import SuggestionList
from .vocabulary import SubjectVocabulary, load_vocabulary, subset

logger = logging.getLogger(__name__)


class UnknownProject(KeyError):
    pass


class Project:
    def __init__(self, config: ProjectConfig, registry: ProjectRegistry):
        self.config = config
        self.registry = registry
        self.backend: Backend = BACKENDS[config.backend](self)

    @property
    def id(self) -> str:
        return self.config.id

    @property
    def model_dir(self) -> Path:
        return self.registry.data_dir / self.id

    @cached_property
    def vocabulary(self) -> SubjectVocabulary:
        if self.config.vocab is None:
            raise ConfigError("project has no vocabulary", self.id, "vocab")
        return self.registry.vocabulary(self.config)

    def members(self) -> list[Project]:
        return [self.registry.get(name) for name in self.config.members]

    def train(self, corpus: Corpus) -> None:
        if not self.backend.trainable:
            self.backend.train(corpus)  # raises with an explanation
        if not corpus.has_gold():
            raise NoTrainingSignal(f"corpus has no gold subjects to train {self.id!r}")
        self.backend.train(corpus)
        self.backend.save()
        logger.info("trained project %s, model in %s", self.id, self.model_dir)

    def suggest(self, text: str, limit: int = 50) -> SuggestionList:
        return self.backend.suggest(text, limit)

    def is_trained(self) -> bool:
        return self.backend.is_trained()


class ProjectRegistry:
    """Projects of one configuration file, loaded lazily and cached."""

    def __init__(self, configs: Iterable[ProjectConfig], data_dir: Path | str = "data"):
        self.configs = {c.id: c for c in configs}
        self.data_dir = Path(data_dir)
        self._projects: dict[str, Project] = {}
        self._vocabularies: dict[tuple, SubjectVocabulary] = {}

    def __contains__(self, project_id: str) -> bool:
        return project_id in self.configs

    def get(self, project_id: str) -> Project:
        if project_id not in self.configs:
            raise UnknownProject(project_id)
        if project_id not in self._projects:
            self._projects[project_id] = Project(self.configs[project_id], self)
        return self._projects[project_id]

    def vocabulary(self, config: ProjectConfig) -> SubjectVocabulary:
        path = config.resolve(config.vocab)
        subset_path = config.resolve(config.vocab_subset)
        analyzer_key = (config.analyzer.normalizer, config.analyzer.min_token_len)
        key = (str(path), str(subset_path), config.vocab_variant, analyzer_key)
        if key not in self._vocabularies:
            vocab = load_vocabulary(path, config.vocab_variant, config.analyzer)
            if subset_path is not None:
                vocab, _ = subset(vocab, subset_path, config.vocab_variant)
            self._vocabularies[key] = vocab
        return self._vocabularies[key]
