"""Subject vocabularies with per-language preferred and alternate labels."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

from .analyzer import AnalyzerConfig, normalize_label
from .exceptions import (
    DuplicateId,
    EmptySubset,
    EmptyVocabulary,
    MissingLabel,
    ParseError,
    VocabularyError,
)

logger = logging.getLogger(__name__)

LANGUAGES = ("de", "en")

SKOS = "http://www.w3.org/2004/02/skos/core#"
PREF_LABEL = SKOS + "prefLabel"
ALT_LABEL = SKOS + "altLabel"
_PREDICATES = {
    PREF_LABEL: PREF_LABEL,
    ALT_LABEL: ALT_LABEL,
    "skos:prefLabel": PREF_LABEL,
    "skos:altLabel": ALT_LABEL,
}


@dataclass(frozen=True)
class Subject:
    id: str
    pref_label: Mapping[str, str]
    alt_labels: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise VocabularyError("subject id must be nonempty")
        for lang, label in self.pref_label.items():
            if not label:
                raise MissingLabel(f"empty {lang} preferred label for {self.id!r}")
        alts = {}
        for lang, labels in self.alt_labels.items():
            # drop duplicates, keep first occurrence order
            alts[lang] = tuple(dict.fromkeys(lab for lab in labels if lab))
        object.__setattr__(self, "pref_label", MappingProxyType(dict(self.pref_label)))
        object.__setattr__(self, "alt_labels", MappingProxyType(alts))

    def labels(self, language: str) -> list[tuple[str, bool]]:
        """(label, is_preferred) pairs for a language, preferred first."""
        out = []
        if language in self.pref_label:
            out.append((self.pref_label[language], True))
        out.extend((alt, False) for alt in self.alt_labels.get(language, ()))
        return out

    def __eq__(self, other):
        if not isinstance(other, Subject):
            return NotImplemented
        return (
            self.id == other.id
            and dict(self.pref_label) == dict(other.pref_label)
            and {k: v for k, v in self.alt_labels.items() if v}
            == {k: v for k, v in other.alt_labels.items() if v}
        )

    def __hash__(self):
        return hash(self.id)


def build_label_index(
    subjects: Iterable[Subject], language: str, analyzer: AnalyzerConfig
) -> dict[str, frozenset[str]]:
    config = replace(analyzer, language=language)
    index: dict[str, set[str]] = {}
    for subject in subjects:
        for label, _ in subject.labels(language):
            key = normalize_label(label, config)
            if key:
                index.setdefault(key, set()).add(subject.id)
    return {key: frozenset(ids) for key, ids in index.items()}


class SubjectVocabulary:
    """An immutable, id-indexed collection of subjects.

    ``label_index[lang]`` maps each normalized label to the ids of the
    subjects carrying it. Labels that normalize to nothing are not indexed.
    """

    def __init__(
        self,
        subjects: Iterable[Subject],
        variant_name: str = "all",
        analyzer: AnalyzerConfig | None = None,
        languages: Iterable[str] = LANGUAGES,
    ):
        by_id: dict[str, Subject] = {}
        for subject in subjects:
            if subject.id in by_id:
                raise DuplicateId(subject.id)
            by_id[subject.id] = subject
        if not by_id:
            raise EmptyVocabulary("vocabulary has no subjects")
        self._subjects = MappingProxyType(by_id)
        self.variant_name = variant_name
        self.analyzer = analyzer or AnalyzerConfig()
        self.languages = tuple(languages)
        self.label_index = MappingProxyType(
            {
                lang: MappingProxyType(build_label_index(by_id.values(), lang, self.analyzer))
                for lang in self.languages
            }
        )
        # token counts of indexed labels, used to bound subsequence matching
        self.label_lengths = {
            lang: sorted({len(key.split()) for key in index})
            for lang, index in self.label_index.items()
        }
        self._pref_keys: dict[str, dict[str, str]] = {}

    @property
    def subjects(self) -> Mapping[str, Subject]:
        return self._subjects

    def __len__(self) -> int:
        return len(self._subjects)

    def __iter__(self) -> Iterator[Subject]:
        return iter(self._subjects.values())

    def __contains__(self, subject_id) -> bool:
        return subject_id in self._subjects

    def __getitem__(self, subject_id: str) -> Subject:
        return self._subjects[subject_id]

    def ids(self) -> list[str]:
        return list(self._subjects)

    def lookup(self, label: str, language: str) -> frozenset[str]:
        key = normalize_label(label, replace(self.analyzer, language=language))
        return self.label_index.get(language, {}).get(key, frozenset())

    def pref_label(self, subject_id: str, language: str) -> str | None:
        return self._subjects[subject_id].pref_label.get(language)

    def pref_key(self, subject_id: str, language: str) -> str | None:
        """Normalized preferred label, as it appears in ``label_index``."""
        keys = self._pref_keys.get(language)
        if keys is None:
            config = replace(self.analyzer, language=language)
            keys = {
                s.id: normalize_label(s.pref_label[language], config)
                for s in self
                if language in s.pref_label
            }
            self._pref_keys[language] = keys
        return keys.get(subject_id)

    def with_analyzer(self, analyzer: AnalyzerConfig) -> SubjectVocabulary:
        """The same subjects, indexed under a different analyzer.

        Only the normalizer and minimum token length affect label keys, so
        the vocabulary itself is returned when those already agree.
        """
        if (analyzer.normalizer, analyzer.min_token_len) == (
            self.analyzer.normalizer,
            self.analyzer.min_token_len,
        ):
            return self
        return SubjectVocabulary(self, self.variant_name, analyzer, self.languages)

    def missing_language(self, language: str) -> list[str]:
        """Ids of subjects lacking a preferred label in ``language``."""
        return [s.id for s in self if language not in s.pref_label]


def load_vocabulary_tsv(
    path, variant_name: str = "all", analyzer: AnalyzerConfig | None = None
) -> SubjectVocabulary:
    """Load ``id, pref_de, pref_en[, alt_de[, alt_en]]`` tab-separated lines.

    Alternate labels are joined with ';'. An empty preferred label means the
    subject has no label in that language.
    """
    subjects = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) < 3:
                raise ParseError(f"expected at least 3 tab-separated fields, got {len(fields)}", lineno)
            if len(fields) > 5:
                raise ParseError(f"expected at most 5 tab-separated fields, got {len(fields)}", lineno)
            fields += [""] * (5 - len(fields))
            subject_id, pref_de, pref_en, alt_de, alt_en = (x.strip() for x in fields)
            if not subject_id:
                raise ParseError("empty subject id", lineno)
            if subject_id in seen:
                raise DuplicateId(subject_id, lineno)
            seen[subject_id] = lineno
            pref = {lang: lab for lang, lab in (("de", pref_de), ("en", pref_en)) if lab}
            if not pref:
                raise MissingLabel(f"line {lineno}: subject {subject_id!r} has no preferred label")
            alts = {}
            for lang, joined in (("de", alt_de), ("en", alt_en)):
                labels = [a.strip() for a in joined.split(";") if a.strip()]
                if labels:
                    if lang not in pref:
                        raise MissingLabel(
                            f"line {lineno}: {lang} alternate labels without a {lang} "
                            f"preferred label for {subject_id!r}"
                        )
                    alts[lang] = labels
            subjects.append(Subject(subject_id, pref, alts))
    if not subjects:
        raise EmptyVocabulary(f"{path}: no subjects")
    return SubjectVocabulary(subjects, variant_name, analyzer)


def write_vocabulary_tsv(vocab: SubjectVocabulary, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for s in vocab:
            row = [
                s.id,
                s.pref_label.get("de", ""),
                s.pref_label.get("en", ""),
                ";".join(s.alt_labels.get("de", ())),
                ";".join(s.alt_labels.get("en", ())),
            ]
            f.write("\t".join(row) + "\n")


_NT_LINE = re.compile(
    r"""^\s*<(?P<s>[^<>\s]+)>\s+<(?P<p>[^<>\s]+)>\s+
    (?:<(?P<o_uri>[^<>\s]+)>|_:(?P<o_blank>\S+)|"(?P<lit>(?:[^"\\]|\\.)*)"
        (?:@(?P<lang>[A-Za-z]+(?:-[A-Za-z0-9]+)*)|\^\^<[^<>\s]+>)?)
    \s*\.\s*$""",
    re.VERBOSE,
)
_BLANK_SUBJECT = re.compile(r"^\s*_:\S+\s")
_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _unescape(literal: str, lineno: int) -> str:
    out = []
    i = 0
    while i < len(literal):
        c = literal[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        nxt = literal[i + 1] if i + 1 < len(literal) else ""
        if nxt in _ESCAPES:
            out.append(_ESCAPES[nxt])
            i += 2
        elif nxt in ("u", "U"):
            width = 4 if nxt == "u" else 8
            digits = literal[i + 2 : i + 2 + width]
            if len(digits) != width:
                raise ParseError("truncated unicode escape", lineno)
            try:
                out.append(chr(int(digits, 16)))
            except ValueError:
                raise ParseError(f"bad unicode escape \\{nxt}{digits}", lineno) from None
            i += 2 + width
        else:
            raise ParseError(f"unknown escape \\{nxt}", lineno)
    return "".join(out)


def parse_ntriples_labels(lines: Iterable[str]) -> Iterator[tuple[int, str, str, str, str]]:
    """Yield (line number, subject, predicate, literal, language) for
    language-tagged skos:prefLabel/altLabel triples. Other well-formed
    triples are skipped; malformed lines raise ParseError."""
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _NT_LINE.match(line)
        if m is None:
            if _BLANK_SUBJECT.match(line) and stripped.endswith(" ."):
                continue  # blank-node subjects carry no subject labels
            raise ParseError(f"malformed triple: {stripped[:80]}", lineno)
        predicate = _PREDICATES.get(m["p"])
        if predicate is None or m["lit"] is None or not m["lang"]:
            continue
        yield lineno, m["s"], predicate, _unescape(m["lit"], lineno), m["lang"].lower()


def load_vocabulary_ntriples(
    path, variant_name: str = "all", analyzer: AnalyzerConfig | None = None
) -> SubjectVocabulary:
    """Load labels from an N-Triples file.

    Only ``skos:prefLabel`` and ``skos:altLabel`` with full predicate URIs and
    language-tagged literals are read. Subject order follows first appearance.
    """
    prefs: dict[str, dict[str, str]] = {}
    alts: dict[str, dict[str, list[str]]] = {}
    order: dict[str, None] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, subj, pred, literal, lang in parse_ntriples_labels(f):
            order.setdefault(subj)
            if pred == PREF_LABEL:
                langs = prefs.setdefault(subj, {})
                if lang in langs:
                    raise VocabularyError(
                        f"line {lineno}: second {lang} prefLabel for {subj!r}"
                    )
                langs[lang] = literal
            else:
                alts.setdefault(subj, {}).setdefault(lang, []).append(literal)
    subjects = []
    for subj in order:
        pref = prefs.get(subj, {})
        if not pref:
            raise MissingLabel(f"subject {subj!r} has alternate labels but no prefLabel")
        alt = alts.get(subj, {})
        for lang in alt:
            if lang not in pref:
                raise MissingLabel(f"subject {subj!r} has {lang} altLabel without a {lang} prefLabel")
        subjects.append(Subject(subj, pref, alt))
    if not subjects:
        raise EmptyVocabulary(f"{path}: no labelled subjects")
    return SubjectVocabulary(subjects, variant_name, analyzer)


def load_vocabulary(path, variant_name: str = "all", analyzer: AnalyzerConfig | None = None):
    """Dispatch on file suffix: ``.nt`` is N-Triples, anything else TSV."""
    if Path(path).suffix.lower() == ".nt":
        return load_vocabulary_ntriples(path, variant_name, analyzer)
    return load_vocabulary_tsv(path, variant_name, analyzer)


def read_id_list(path) -> list[str]:
    ids = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if line:
                ids.append(line.strip("<>"))
    return ids


def subset(
    vocab: SubjectVocabulary, ids_file, variant_name: str
) -> tuple[SubjectVocabulary, list[str]]:
    """Restrict ``vocab`` to the ids listed in ``ids_file``.

    Returns the new vocabulary and a list of warnings, one per listed id that
    is not in ``vocab``.
    """
    wanted = dict.fromkeys(read_id_list(ids_file))
    warnings = [f"subject {sid!r} not in vocabulary {vocab.variant_name!r}" for sid in wanted if sid not in vocab]
    for w in warnings:
        logger.warning(w)
    kept = [s for s in vocab if s.id in wanted]
    if not kept:
        raise EmptySubset(f"none of the ids in {ids_file} are in the vocabulary")
    return SubjectVocabulary(kept, variant_name, vocab.analyzer, vocab.languages), warnings
