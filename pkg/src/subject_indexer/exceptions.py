"""Exception hierarchy. Every data or model problem raises a subclass of
IndexingError so that the CLI can map it to exit code 1."""


class IndexingError(Exception):
    """Base class for all errors raised by this package."""


class VocabularyError(IndexingError):
    pass


class DuplicateId(VocabularyError):
    def __init__(self, subject_id, line=None):
        self.subject_id = subject_id
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"duplicate subject id {subject_id!r}{where}")


class MissingLabel(VocabularyError):
    pass


class EmptyVocabulary(VocabularyError):
    pass


class EmptySubset(VocabularyError):
    pass


class ParseError(IndexingError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CorpusError(IndexingError):
    pass


class MissingField(CorpusError):
    def __init__(self, field, line):
        self.field = field
        self.line = line
        super().__init__(f"missing field {field!r} on line {line}")


class IdCollision(CorpusError):
    pass


class SizeMismatch(CorpusError):
    pass


class EmptyFeatureSpace(IndexingError):
    pass


class NoTrainingSignal(IndexingError):
    pass


class LlmError(IndexingError):
    pass


class EmptyResponse(LlmError):
    def __init__(self, item_id):
        self.item_id = item_id
        super().__init__(f"empty response from endpoint for {item_id!r}")


class EndpointError(LlmError):
    pass


class NumberingMismatch(LlmError):
    pass


class ConfigError(IndexingError):
    def __init__(self, message, section=None, key=None):
        self.section = section
        self.key = key
        where = ""
        if section is not None:
            where = f"[{section}]"
            if key is not None:
                where += f" {key}"
            where += ": "
        super().__init__(where + message)


class DanglingReference(ConfigError):
    pass


class UnknownBackend(ConfigError):
    pass


class SimplexViolation(ConfigError):
    """Ensemble weights are negative or do not sum to one."""
