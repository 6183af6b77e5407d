"""Exception hierarchy shared by all labrec modules.

Every domain error derives from :class:`LabrecError` so callers (CLI,
service) can distinguish user/data problems from genuine bugs. I/O
failures are left to the builtin ``OSError``.
"""


class LabrecError(Exception):
    """Base class for all labrec domain errors."""


class EmptyDatasetError(LabrecError):
    """No bags were supplied where at least one is required."""


class OutOfVocabularyError(LabrecError):
    """An item index or identifier falls outside the vocabulary."""


class EmptyQueryError(LabrecError):
    """A query resolved to zero known items."""


class SchemaError(LabrecError):
    """An input file is missing a required column or field."""


class DimensionError(LabrecError):
    """Two vectors (or a vector and a matrix) disagree on item count."""


class ParameterError(LabrecError):
    """A hyperparameter or metric argument is outside its valid range."""


class VersionError(LabrecError):
    """A model file declares an unsupported format version."""


class CorruptModelError(LabrecError):
    """A model file is unreadable or internally inconsistent."""
