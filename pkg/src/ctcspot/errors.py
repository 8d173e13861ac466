"""Exception types shared across the package."""


class DataError(Exception):
    """Malformed or inconsistent input data (CLI exit code 2)."""


class FormatError(DataError):
    """A file does not follow its documented layout."""


class InvalidValueError(DataError):
    """A well-formed container carries an out-of-contract value."""


class DuplicateTokenError(DataError):
    """A vocabulary defines the same token twice."""


class UnsegmentableError(DataError):
    """A word cannot be covered by vocabulary tokens."""


class OverlappingWordsError(DataError):
    """Alignment word intervals overlap or are out of order."""


class DimensionMismatchError(DataError):
    """Matrix, vocabulary, or graph sizes disagree."""


class VocabularyMismatchError(DataError):
    """A serialized graph was built against a different vocabulary."""
