"""Project configuration files.

An INI-style file holds one section per project. The section name is the
project id. Recognised keys::

    name           display name (defaults to the project id)
    backend        lexical | tree | simple_ensemble | neural_ensemble, or a
                   registered third-party kind
    language       de | en
    vocab          vocabulary file, .tsv or .nt, relative to the config file
    vocab_variant  variant name, e.g. all or core (default: all)
    vocab_subset   optional id list restricting the vocabulary
    normalizer, min_token_len, ngram, min_df
                   analyzer settings
    sources        ensembles only: ``project:weight, project:weight, ...``

Any other key must be a parameter of the chosen backend. Lines starting
with ``#`` or ``;`` are comments.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .analyzer import NORMALIZERS, AnalyzerConfig
from .backends import BACKENDS
from .corpus import RECORD_LANGUAGES
from .ensemble import check_simplex
from .exceptions import ConfigError, DanglingReference, UnknownBackend

ANALYZER_KEYS = ("normalizer", "min_token_len", "ngram", "min_df")
COMMON_KEYS = ("name", "backend", "language", "vocab", "vocab_variant", "vocab_subset", "sources")


@dataclass(frozen=True)
class ProjectConfig:
    id: str
    name: str
    backend: str
    language: str
    analyzer: AnalyzerConfig
    vocab: str | None = None
    vocab_variant: str = "all"
    vocab_subset: str | None = None
    params: dict[str, Any] = field(default_factory=dict)
    sources: tuple[tuple[str, float], ...] = ()
    base_dir: Path = field(default=Path("."), compare=False)

    @property
    def is_ensemble(self) -> bool:
        return BACKENDS[self.backend].is_ensemble

    @property
    def members(self) -> list[str]:
        return [name for name, _ in self.sources]

    @property
    def weights(self) -> list[float]:
        return [w for _, w in self.sources]

    def resolve(self, path: str | None) -> Path | None:
        if path is None:
            return None
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def _convert(section: str, key: str, value: str, kind: type):
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"expected {kind.__name__}, got {value!r}", section, key) from None


def parse_sources(section: str, value: str) -> tuple[tuple[str, float], ...]:
    sources = []
    for item in value.split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, weight = item.rpartition(":")
        if not sep or not name.strip():
            raise ConfigError(f"expected project:weight, got {item!r}", section, "sources")
        sources.append((name.strip(), _convert(section, "sources", weight.strip(), float)))
    return tuple(sources)


def _parse_section(section: str, values: dict[str, str], base_dir: Path) -> ProjectConfig:
    backend = values.get("backend")
    if backend is None:
        raise ConfigError("missing key", section, "backend")
    if backend not in BACKENDS:
        raise UnknownBackend(
            f"unknown backend kind {backend!r} (known: {', '.join(sorted(BACKENDS))})", section, "backend"
        )
    backend_cls = BACKENDS[backend]

    language = values.get("language")
    if language is None:
        raise ConfigError("missing key", section, "language")
    if language not in RECORD_LANGUAGES:
        raise ConfigError(f"unsupported language {language!r}", section, "language")

    analyzer_args: dict[str, Any] = {"language": language}
    if "normalizer" in values:
        if values["normalizer"] not in NORMALIZERS:
            raise ConfigError(f"unknown normalizer {values['normalizer']!r}", section, "normalizer")
        analyzer_args["normalizer"] = values["normalizer"]
    for key in ("min_token_len", "ngram", "min_df"):
        if key in values:
            analyzer_args[key] = _convert(section, key, values[key], int)
    try:
        analyzer = AnalyzerConfig(**analyzer_args)
    except ValueError as err:
        raise ConfigError(str(err), section) from None

    params = {}
    for key, value in values.items():
        if key in COMMON_KEYS or key in ANALYZER_KEYS:
            continue
        if key not in backend_cls.params:
            raise ConfigError(f"not a parameter of backend {backend!r}", section, key)
        params[key] = _convert(section, key, value, backend_cls.params[key][0])

    sources: tuple[tuple[str, float], ...] = ()
    if backend_cls.is_ensemble:
        if "sources" not in values:
            raise ConfigError("ensembles need sources", section, "sources")
        sources = parse_sources(section, values["sources"])
        if len(sources) < 2:
            raise ConfigError("an ensemble needs at least two sources", section, "sources")
        check_simplex([w for _, w in sources], section)
    elif "sources" in values:
        raise ConfigError("only ensembles take sources", section, "sources")
    elif "vocab" not in values:
        raise ConfigError("missing key", section, "vocab")

    return ProjectConfig(
        id=section,
        name=values.get("name", section),
        backend=backend,
        language=language,
        analyzer=analyzer,
        vocab=values.get("vocab"),
        vocab_variant=values.get("vocab_variant", "all"),
        vocab_subset=values.get("vocab_subset"),
        params=params,
        sources=sources,
        base_dir=base_dir,
    )


def _check_references(projects: dict[str, ProjectConfig]) -> None:
    for project in projects.values():
        for member in project.members:
            if member not in projects:
                raise DanglingReference(f"source {member!r} is not a defined project", project.id, "sources")
            other = projects[member]
            if other.is_ensemble:
                raise ConfigError(f"source {member!r} is itself an ensemble", project.id, "sources")
            if other.vocab_variant != project.vocab_variant:
                raise ConfigError(
                    f"source {member!r} uses vocabulary variant {other.vocab_variant!r}, "
                    f"not {project.vocab_variant!r}",
                    project.id,
                    "sources",
                )
            if other.language != project.language:
                raise ConfigError(
                    f"source {member!r} has language {other.language!r}, not {project.language!r}",
                    project.id,
                    "sources",
                )


def parse_config(text: str, base_dir: Path | str = ".") -> list[ProjectConfig]:
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"), strict=True)
    parser.optionxform = str  # keep key case as written
    try:
        parser.read_string(text)
    except configparser.DuplicateSectionError as err:
        raise ConfigError("duplicate section", err.section) from None
    except configparser.DuplicateOptionError as err:
        raise ConfigError("duplicate key", err.section, err.option) from None
    except configparser.MissingSectionHeaderError as err:
        raise ConfigError(f"line {err.lineno}: key outside of any section") from None
    except configparser.Error as err:
        raise ConfigError(str(err).splitlines()[0]) from None
    projects: dict[str, ProjectConfig] = {}
    for section in parser.sections():
        values = {k: v.strip() for k, v in parser.items(section)}
        projects[section] = _parse_section(section, values, Path(base_dir))
    if not projects:
        raise ConfigError("configuration defines no projects")
    _check_references(projects)
    return list(projects.values())


def load_config(path) -> list[ProjectConfig]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err.strerror}") from None
    return parse_config(text, path.parent)


def dump_config(projects: Iterable[ProjectConfig]) -> str:
    """Serialize projects so that parsing the result gives equal configs."""
    out = io.StringIO()
    for project in projects:
        defaults = AnalyzerConfig(language=project.language)
        lines = [
            f"[{project.id}]",
            f"name = {project.name}",
            f"backend = {project.backend}",
            f"language = {project.language}",
        ]
        if project.vocab is not None:
            lines.append(f"vocab = {project.vocab}")
        lines.append(f"vocab_variant = {project.vocab_variant}")
        if project.vocab_subset is not None:
            lines.append(f"vocab_subset = {project.vocab_subset}")
        for key in ANALYZER_KEYS:
            value = getattr(project.analyzer, key)
            if value != getattr(defaults, key):
                lines.append(f"{key} = {value}")
        for key, value in project.params.items():
            lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
        if project.sources:
            lines.append("sources = " + ", ".join(f"{n}:{w!r}" for n, w in project.sources))
        out.write("\n".join(lines) + "\n\n")
    return out.getvalue()
