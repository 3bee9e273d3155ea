"""Automated subject indexing with lexical and label-tree backends."""

from .corpus import Corpus, DocumentRecord, load_corpus_jsonl
from .evaluation import evaluate_run
from .exceptions import IndexingError
from .suggestions import SuggestionList, read_run, write_run
from .vocabulary import Subject, SubjectVocabulary, load_vocabulary

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "DocumentRecord",
    "IndexingError",
    "Subject",
    "SubjectVocabulary",
    "SuggestionList",
    "evaluate_run",
    "load_corpus_jsonl",
    "load_vocabulary",
    "read_run",
    "write_run",
]
