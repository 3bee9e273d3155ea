"""LLM-assisted data preparation over an OpenAI-compatible chat endpoint.

Records are translated into monolingual variants, German preferred labels
are translated to English in numbered batches, and synthetic training
records are generated from existing ones plus one random extra subject.
``MockEndpoint`` answers all three prompt types offline and deterministically.
"""

from __future__ import annotations

import logging
import os
import random
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from typing import Callable, Mapping, Protocol, Sequence

import httpx

from .corpus import Corpus, DocumentRecord
from .exceptions import EmptyResponse, EndpointError, LlmError, NumberingMismatch
from .vocabulary import Subject, SubjectVocabulary

logger = logging.getLogger(__name__)

LANGUAGE_NAMES = {"de": "German", "en": "English"}
TERM_BATCH_SIZE = 100

_PLACEHOLDER = re.compile(r"<([A-Z_]+)>")
_BLANK_LINE = re.compile(r"\n[ \t]*\n")
_NUMBERED = re.compile(r"^\s*(\d+)\.\s*(.*?)\s*$")


class TemplateError(LlmError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    system: str
    user: str

    @property
    def placeholders(self) -> set[str]:
        return set(_PLACEHOLDER.findall(self.user))

    def render(self, **values: str) -> tuple[str, str]:
        """Fill every ``<NAME>`` placeholder; returns (system, user) messages."""
        missing = self.placeholders - values.keys()
        if missing:
            raise TemplateError(f"unfilled placeholders: {', '.join(sorted(missing))}")
        # single pass, so placeholder-like text inside values is left alone
        user = _PLACEHOLDER.sub(lambda m: values[m.group(1)], self.user)
        return self.system, user

    @classmethod
    def load(cls, name: str, directory=None) -> PromptTemplate:
        """Read ``<name>.system.txt`` and ``<name>.user.txt``.

        Templates ship with the package; ``directory`` points at edited copies.
        """
        def read(part):
            filename = f"{name}.{part}.txt"
            if directory is not None:
                with open(os.path.join(directory, filename), encoding="utf-8") as f:
                    text = f.read()
            else:
                text = resources.files("subject_indexer").joinpath("templates").joinpath(filename).read_text("utf-8")
            return text[:-1] if text.endswith("\n") else text

        return cls(read("system"), read("user"))


TRANSLATE_RECORD = PromptTemplate.load("translate_record")
SYNTHESIZE_RECORD = PromptTemplate.load("synthesize_record")
TRANSLATE_TERMS = PromptTemplate.load("translate_terms")


class ChatEndpoint(Protocol):
    max_in_flight: int

    def complete(self, system: str, user: str) -> str: ...


@dataclass(frozen=True)
class LlmEndpointConfig:
    base_url: str
    model: str
    api_key_env: str = "OPENAI_API_KEY"
    temperature: float = 0.0
    max_in_flight: int = 4
    timeout: float = 120.0
    retries: int = 3
    backoff: float = 1.0

    def __post_init__(self):
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")

    @property
    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env)


RETRY_STATUS = {408, 409, 429, 500, 502, 503, 504}


class ChatCompletionsEndpoint:
    """Synchronous chat-completions client, safe to share across threads."""

    def __init__(
        self,
        config: LlmEndpointConfig,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self.max_in_flight = config.max_in_flight
        self._sleep = sleep
        headers = {"Content-Type": "application/json"}
        if config.api_key:
            headers["Authorization"] = f"Bearer {config.api_key}"
        self._client = httpx.Client(
            base_url=config.base_url.rstrip("/") + "/",
            headers=headers,
            timeout=config.timeout,
            transport=transport,
        )

    def request_body(self, system: str, user: str) -> dict:
        return {
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": self.config.temperature,
        }

    def complete(self, system: str, user: str) -> str:
        body = self.request_body(system, user)
        last_error = None
        for attempt in range(self.config.retries + 1):
            if attempt:
                self._sleep(self.config.backoff * 2 ** (attempt - 1))
            try:
                response = self._client.post("chat/completions", json=body)
            except httpx.TransportError as err:
                last_error = f"{type(err).__name__}: {err}"
                continue
            if response.status_code in RETRY_STATUS:
                last_error = f"HTTP {response.status_code}"
                continue
            if response.is_error:
                raise EndpointError(f"HTTP {response.status_code}: {response.text[:200]}")
            try:
                content = response.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError):
                raise EndpointError(f"unexpected response body: {response.text[:200]}") from None
            return content or ""
        raise EndpointError(f"giving up after {self.config.retries + 1} attempts: {last_error}")

    def close(self) -> None:
        self._client.close()


def _section_after(text: str, marker: str) -> str:
    head, sep, tail = text.partition(marker)
    return tail if sep else ""


class MockEndpoint:
    """Offline stand-in that understands the three shipped prompts.

    Record translation is the identity, term translation looks terms up in
    ``term_translations`` (unknown terms come back unchanged), and synthesis
    stitches the requested keywords into a title and description.
    """

    def __init__(self, term_translations: Mapping[str, str] | None = None, max_in_flight: int = 4):
        self.term_translations = dict(term_translations or {})
        self.max_in_flight = max_in_flight
        self.calls: list[tuple[str, str]] = []
        self._lock = threading.Lock()

    def complete(self, system: str, user: str) -> str:
        with self._lock:
            self.calls.append((system, user))
        if system == TRANSLATE_RECORD.system:
            return _section_after(user, ":\n\n").strip()
        if system == TRANSLATE_TERMS.system:
            listing = _section_after(user, "Now translate the following thesaurus terms to English:\n\n")
            out = []
            for line in listing.splitlines():
                m = _NUMBERED.match(line)
                if m:
                    term = m.group(2)
                    out.append(f"{m.group(1)}. {self.term_translations.get(term, term)}")
            return "\n".join(out)
        if system == SYNTHESIZE_RECORD.system:
            keywords = _section_after(user, "match the following subject keywords: ").strip()
            terms = [k.strip() for k in keywords.split(",") if k.strip()]
            title = " and ".join(terms[:2]) if terms else "Untitled"
            return f"{title}\n\nA study of {', '.join(terms)}."
        raise EndpointError("mock endpoint does not recognize this prompt")


def split_title_abstract(response: str) -> tuple[str, str]:
    """First block up to the first blank line is the title, the rest the abstract."""
    parts = _BLANK_LINE.split(response.strip(), maxsplit=1)
    title = parts[0].strip()
    abstract = parts[1].strip() if len(parts) > 1 else ""
    return title, abstract


def _complete(endpoint: ChatEndpoint, prompt: tuple[str, str], item_id: str) -> str:
    try:
        response = endpoint.complete(*prompt)
    except EndpointError as err:
        raise EndpointError(f"{item_id}: {err}") from err
    if not response or not response.strip():
        raise EmptyResponse(item_id)
    return response


def _ordered_map(endpoint: ChatEndpoint, fn, items: Sequence):
    workers = max(1, getattr(endpoint, "max_in_flight", 1))
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def title_and_description(rec: DocumentRecord) -> str:
    return f"{rec.title}\n\n{rec.abstract}" if rec.abstract else rec.title


def translate_record(rec: DocumentRecord, target: str, endpoint: ChatEndpoint) -> DocumentRecord:
    prompt = TRANSLATE_RECORD.render(
        LANGUAGE=LANGUAGE_NAMES[target], TITLE=rec.title, DESCRIPTION=rec.abstract
    )
    title, abstract = split_title_abstract(_complete(endpoint, prompt, rec.id))
    return replace(rec, id=f"{rec.id}-{target}", language=target, title=title, abstract=abstract)


def translate_corpus(corpus: Corpus, target: str, endpoint: ChatEndpoint) -> Corpus:
    records = _ordered_map(endpoint, lambda r: translate_record(r, target, endpoint), corpus.records)
    return Corpus(records, corpus.origin)


def parse_numbered_list(response: str, expected: int, batch_label: str) -> list[str]:
    entries = [m.groups() for m in map(_NUMBERED.match, response.splitlines()) if m]
    if len(entries) != expected:
        raise NumberingMismatch(f"{batch_label}: expected {expected} numbered lines, got {len(entries)}")
    numbers = [int(n) for n, _ in entries]
    if numbers != list(range(1, expected + 1)):
        raise NumberingMismatch(f"{batch_label}: numbering {numbers} is not 1..{expected}")
    return [text for _, text in entries]


def translate_terms(
    terms: Sequence[str], endpoint: ChatEndpoint, batch_size: int = TERM_BATCH_SIZE
) -> list[str]:
    """Translate German terms to English, ``batch_size`` terms per request."""
    if not terms:
        raise ValueError("no terms to translate")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    batches = [list(terms[i : i + batch_size]) for i in range(0, len(terms), batch_size)]

    def run(indexed):
        n, batch = indexed
        listing = "\n".join(f"{i}. {term}" for i, term in enumerate(batch, start=1))
        label = f"batch {n + 1} (terms {n * batch_size + 1}-{n * batch_size + len(batch)})"
        response = _complete(endpoint, TRANSLATE_TERMS.render(LIST_OF_TERMS=listing), label)
        return parse_numbered_list(response, len(batch), label)

    out = []
    for translated in _ordered_map(endpoint, run, list(enumerate(batches))):
        out.extend(translated)
    return out


def translate_vocabulary(
    vocab: SubjectVocabulary, endpoint: ChatEndpoint, batch_size: int = TERM_BATCH_SIZE
) -> SubjectVocabulary:
    """Give every subject with a German preferred label an English one.

    Alternate labels are left untouched.
    """
    german = [s for s in vocab if "de" in s.pref_label]
    translated = translate_terms([s.pref_label["de"] for s in german], endpoint, batch_size)
    english = {s.id: t for s, t in zip(german, translated)}
    subjects = []
    for s in vocab:
        pref = dict(s.pref_label)
        if english.get(s.id):
            pref["en"] = english[s.id]
        subjects.append(Subject(s.id, pref, s.alt_labels))
    return SubjectVocabulary(subjects, vocab.variant_name, vocab.analyzer, vocab.languages)


def choose_extra_subject(example: DocumentRecord, vocab: SubjectVocabulary, seed: int, part: int) -> str:
    """Seeded choice of a subject outside the example's gold set.

    The draw depends only on (seed, record id, part), not on processing order.
    """
    eligible = sorted(
        s.id for s in vocab if s.id not in example.subjects and example.language in s.pref_label
    )
    if not eligible:
        raise LlmError(f"{example.id}: no eligible extra subject in the vocabulary")
    return random.Random(f"{seed}:{example.id}:{part}").choice(eligible)


def synthesize_record(
    example: DocumentRecord,
    vocab: SubjectVocabulary,
    endpoint: ChatEndpoint,
    seed: int = 0,
    part: int = 1,
) -> DocumentRecord:
    if not example.subjects:
        raise LlmError(f"{example.id}: synthesis needs an example with gold subjects")
    lang = example.language
    extra = choose_extra_subject(example, vocab, seed, part)
    old = [vocab.pref_label(s, lang) for s in sorted(example.subjects) if s in vocab]
    old = [label for label in old if label]
    new = old + [vocab.pref_label(extra, lang)]
    prompt = SYNTHESIZE_RECORD.render(
        LANGUAGE=LANGUAGE_NAMES[lang],
        OLD_KEYWORDS=", ".join(old),
        TITLE_DESC=title_and_description(example),
        NEW_KEYWORDS=", ".join(new),
    )
    new_id = f"{example.id}-syn{part}"
    title, abstract = split_title_abstract(_complete(endpoint, prompt, new_id))
    return DocumentRecord(new_id, lang, title, abstract, example.subjects | {extra})


def synthesize_corpus(
    corpus: Corpus, vocab: SubjectVocabulary, endpoint: ChatEndpoint, seed: int = 0, part: int = 1
) -> Corpus:
    records = _ordered_map(
        endpoint, lambda r: synthesize_record(r, vocab, endpoint, seed, part), corpus.records
    )
    return Corpus(records, "synthetic")


def synthesize_parts(
    corpus: Corpus, vocab: SubjectVocabulary, endpoint: ChatEndpoint, parts: int = 3, seed: int = 0
) -> list[Corpus]:
    return [synthesize_corpus(corpus, vocab, endpoint, seed, part) for part in range(1, parts + 1)]
