"""Bibliographic records and corpora stored as JSON Lines."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .exceptions import CorpusError, IdCollision, MissingField, ParseError, SizeMismatch

RECORD_LANGUAGES = ("de", "en")
ORIGINS = ("original", "synthetic", "mixed")


@dataclass(frozen=True)
class DocumentRecord:
    id: str
    language: str
    title: str
    abstract: str = ""
    subjects: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.id:
            raise CorpusError("record id must be nonempty")
        if self.language not in RECORD_LANGUAGES:
            raise CorpusError(f"record {self.id!r}: unsupported language {self.language!r}")
        object.__setattr__(self, "subjects", frozenset(self.subjects))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "language": self.language,
            "title": self.title,
            "abstract": self.abstract,
            "subjects": sorted(self.subjects),
        }


def document_text(rec: DocumentRecord) -> str:
    """Title and abstract joined by a newline; the title alone if there is no abstract."""
    if not rec.abstract:
        return rec.title
    return f"{rec.title}\n{rec.abstract}"


class Corpus:
    def __init__(self, records: Iterable[DocumentRecord], origin: str = "original"):
        if origin not in ORIGINS:
            raise ValueError(f"unknown corpus origin {origin!r}")
        self.records: tuple[DocumentRecord, ...] = tuple(records)
        self.origin = origin
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise IdCollision(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[DocumentRecord]:
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def __eq__(self, other):
        if not isinstance(other, Corpus):
            return NotImplemented
        return self.records == other.records and self.origin == other.origin

    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def by_id(self) -> dict[str, DocumentRecord]:
        return {r.id: r for r in self.records}

    def has_gold(self) -> bool:
        return any(r.subjects for r in self.records)

    def unknown_subjects(self, vocab) -> set[str]:
        """Gold subject ids that are not part of ``vocab``."""
        return {s for r in self.records for s in r.subjects if s not in vocab}


def _parse_record(obj, lineno: int) -> DocumentRecord:
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object", lineno)
    for key in ("id", "language", "title"):
        if key not in obj:
            raise MissingField(key, lineno)
    subjects = obj.get("subjects") or []
    if not isinstance(subjects, list) or not all(isinstance(s, str) for s in subjects):
        raise ParseError("'subjects' must be a list of strings", lineno)
    try:
        return DocumentRecord(
            id=str(obj["id"]),
            language=obj["language"],
            title=obj["title"] or "",
            abstract=obj.get("abstract") or "",
            subjects=frozenset(subjects),
        )
    except CorpusError as err:
        raise ParseError(str(err), lineno) from None


def parse_corpus_lines(lines: Iterable[str]) -> Corpus:
    records = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as err:
            raise ParseError(f"invalid JSON: {err.msg}", lineno) from None
        rec = _parse_record(obj, lineno)
        if rec.id in seen:
            raise IdCollision(f"line {lineno}: duplicate record id {rec.id!r}")
        seen.add(rec.id)
        records.append(rec)
    return Corpus(records, "original")


def load_corpus_jsonl(path) -> Corpus:
    with open(path, encoding="utf-8") as f:
        return parse_corpus_lines(f)


def dumps_corpus(corpus: Corpus) -> str:
    return "".join(json.dumps(r.to_dict(), ensure_ascii=False) + "\n" for r in corpus)


def write_corpus_jsonl(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dumps_corpus(corpus))


def mix_synthetic(original: Corpus, synthetic_parts: Sequence[Corpus]) -> Corpus:
    """Append synthetic parts after the original records.

    Each part must have been generated one-for-one from ``original``.
    """
    seen = set(original.ids())
    records = list(original.records)
    for n, part in enumerate(synthetic_parts, start=1):
        if len(part) != len(original):
            raise SizeMismatch(
                f"synthetic part {n} has {len(part)} records, original has {len(original)}"
            )
        for rec in part:
            if rec.id in seen:
                raise IdCollision(f"synthetic part {n}: record id {rec.id!r} already used")
            seen.add(rec.id)
            records.append(rec)
    return Corpus(records, "mixed")
