"""Ranked subject suggestions and the TSV run-file format."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .exceptions import ParseError

RUN_LIMIT = 50


def _rank_key(item: tuple[str, float]):
    return (-item[1], item[0])


@dataclass(frozen=True)
class SuggestionList:
    """Suggestions sorted by descending score, ties broken by subject id."""

    items: tuple[tuple[str, float], ...] = ()
    provenance: str = ""

    def __post_init__(self):
        items = tuple((str(sid), float(score)) for sid, score in self.items)
        ids = [sid for sid, _ in items]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate subject ids in suggestion list")
        object.__setattr__(self, "items", tuple(sorted(items, key=_rank_key)))

    @classmethod
    def from_scores(
        cls, scores: Mapping[str, float], limit: int | None = None, provenance: str = ""
    ) -> SuggestionList:
        items = sorted(scores.items(), key=_rank_key)
        if limit is not None:
            items = items[: max(limit, 0)]
        return cls(tuple(items), provenance)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[tuple[str, float]]:
        return iter(self.items)

    def __bool__(self) -> bool:
        return bool(self.items)

    def ids(self) -> list[str]:
        return [sid for sid, _ in self.items]

    def scores(self) -> dict[str, float]:
        return dict(self.items)

    def top(self, k: int) -> SuggestionList:
        return SuggestionList(self.items[: max(k, 0)], self.provenance)


EMPTY = SuggestionList()


def format_run(run: Mapping[str, SuggestionList], limit: int = RUN_LIMIT) -> str:
    lines = []
    for doc_id, suggestions in run.items():
        for rank, (sid, score) in enumerate(suggestions.items[:limit], start=1):
            lines.append(f"{doc_id}\t{rank}\t{sid}\t{score!r}\n")
    return "".join(lines)


def write_run(run: Mapping[str, SuggestionList], path, limit: int = RUN_LIMIT) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(format_run(run, limit))


def parse_run(lines: Iterable[str], provenance: str = "") -> dict[str, SuggestionList]:
    """Parse ``doc_id<TAB>rank<TAB>subject_id<TAB>score`` lines.

    Documents keep their order of first appearance.
    """
    rows: dict[str, list[tuple[int, str, float]]] = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ParseError(f"expected 4 tab-separated fields, got {len(fields)}", lineno)
        doc_id, rank, sid, score = fields
        try:
            rank_n = int(rank)
            score_f = float(score)
        except ValueError:
            raise ParseError(f"bad rank or score: {line!r}", lineno) from None
        if rank_n < 1 or not doc_id or not sid:
            raise ParseError(f"invalid row: {line!r}", lineno)
        doc_rows = rows.setdefault(doc_id, [])
        if any(s == sid for _, s, _ in doc_rows):
            raise ParseError(f"subject {sid!r} repeated for document {doc_id!r}", lineno)
        doc_rows.append((rank_n, sid, score_f))
    return {
        doc_id: SuggestionList(tuple((sid, score) for _, sid, score in sorted(r)), provenance)
        for doc_id, r in rows.items()
    }


def read_run(path) -> dict[str, SuggestionList]:
    with open(path, encoding="utf-8") as f:
        return parse_run(f, provenance=str(path))
