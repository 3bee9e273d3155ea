"""Generated corpora and vocabularies for tests, demos and the CLI pipeline.

Real subject vocabularies and catalogue records are not redistributable, so
everything here is synthesized from made-up words with a fixed seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .corpus import Corpus, DocumentRecord
from .vocabulary import Subject, SubjectVocabulary

_ONSETS = ("b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v", "z", "br", "kl", "tr")
_VOWELS = ("a", "e", "i", "o", "u")


def pseudo_words(n: int, rng: random.Random, syllables: int = 3, exclude=()) -> list[str]:
    """``n`` distinct pronounceable letter-only words."""
    seen = set(exclude)
    words = []
    while len(words) < n:
        word = "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) for _ in range(syllables))
        word += rng.choice(("x", "k", "m"))  # avoid endings a suffix stemmer would strip
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


@dataclass
class SeparableFixture:
    vocab: SubjectVocabulary
    train: Corpus
    dev: Corpus
    signal: dict[str, str]  # subject id -> its signal token


def separable_fixture(
    n_subjects: int = 50,
    n_train: int = 500,
    n_dev: int = 100,
    subjects_per_doc: int = 5,
    filler_per_doc: int = 20,
    language: str = "en",
    seed: int = 0,
) -> SeparableFixture:
    """Each subject owns one unique token, which is also its preferred label.

    Every document carries ``subjects_per_doc`` gold subjects, their signal
    tokens, and random filler words shared by all subjects.
    """
    rng = random.Random(seed)
    signals = pseudo_words(n_subjects, rng)
    fillers = pseudo_words(200, rng, syllables=2, exclude=signals)
    ids = [f"gnd:s{i:03d}" for i in range(n_subjects)]
    signal = dict(zip(ids, signals))
    vocab = SubjectVocabulary(
        [Subject(sid, {"de": signal[sid], "en": signal[sid]}) for sid in ids], "all"
    )

    def make(prefix: str, n: int) -> Corpus:
        records = []
        for d in range(n):
            gold = rng.sample(ids, subjects_per_doc)
            words = [signal[s] for s in gold] + rng.choices(fillers, k=filler_per_doc)
            rng.shuffle(words)
            title, abstract = " ".join(words[:6]), " ".join(words[6:])
            records.append(DocumentRecord(f"{prefix}{d:04d}", language, title, abstract, frozenset(gold)))
        return Corpus(records)

    return SeparableFixture(vocab, make("train-", n_train), make("dev-", n_dev), signal)


@dataclass
class BilingualFixture:
    vocab: SubjectVocabulary
    train_de: Corpus
    train_en: Corpus
    test_de: Corpus
    test_en: Corpus


def bilingual_fixture(
    n_subjects: int = 40,
    n_train: int = 200,
    n_test: int = 60,
    subjects_per_doc: int = 4,
    filler_per_doc: int = 15,
    seed: int = 0,
) -> BilingualFixture:
    """Paired German/English records where each language variant mentions
    only half of the record's gold subjects.

    The German variant carries the German labels of the first half of the
    gold set, the English variant the English labels of the second half, so
    neither monolingual run can recover the whole set on its own.
    """
    rng = random.Random(seed)
    de_labels = pseudo_words(n_subjects, rng)
    en_labels = pseudo_words(n_subjects, rng, exclude=de_labels)
    fillers = pseudo_words(200, rng, syllables=2, exclude=de_labels + en_labels)
    ids = [f"gnd:b{i:03d}" for i in range(n_subjects)]
    vocab = SubjectVocabulary(
        [Subject(sid, {"de": de, "en": en}) for sid, de, en in zip(ids, de_labels, en_labels)],
        "all",
    )
    label = {"de": dict(zip(ids, de_labels)), "en": dict(zip(ids, en_labels))}
    half = subjects_per_doc // 2

    def make(prefix: str, n: int) -> tuple[Corpus, Corpus]:
        out = {"de": [], "en": []}
        for d in range(n):
            gold = rng.sample(ids, subjects_per_doc)
            for lang, part in (("de", gold[:half]), ("en", gold[half:])):
                words = [label[lang][s] for s in part] + rng.choices(fillers, k=filler_per_doc)
                rng.shuffle(words)
                out[lang].append(
                    DocumentRecord(
                        f"{prefix}{d:04d}",
                        lang,
                        " ".join(words[:5]),
                        " ".join(words[5:]),
                        frozenset(gold),
                    )
                )
        return Corpus(out["de"]), Corpus(out["en"])

    train_de, train_en = make("train-", n_train)
    test_de, test_en = make("test-", n_test)
    return BilingualFixture(vocab, train_de, train_en, test_de, test_en)
