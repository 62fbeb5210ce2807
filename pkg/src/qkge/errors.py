"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: data-shaped failures (anything under
``DataFormatError``, plus ``EmptySplitError``) exit 2, numeric failures
(``ZeroNormError``) exit 3.
"""


class QkgeError(Exception):
    """Base class for all errors raised by this package."""


class LengthMismatchError(QkgeError, ValueError):
    """Two quaternion vectors of different lengths were combined."""


class ZeroNormError(QkgeError, ArithmeticError):
    """Normalization was requested for a quaternion with (near-)zero norm.

    Signals a degenerate parameter row; raised when the squared norm falls
    below the configured epsilon.
    """


class IndexOutOfRangeError(QkgeError, IndexError):
    """An entity or relation index is outside the parameter tables."""


class DataFormatError(QkgeError):
    """A dataset or checkpoint file does not match its declared format."""


class MalformedLineError(DataFormatError):
    """A dataset file contains a line that cannot be parsed."""

    def __init__(self, path, line_no, reason):
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"{self.path}:{line_no}: {reason}")


class CountMismatchError(DataFormatError):
    """A file's declared record count does not match its contents."""


class EmptySplitError(DataFormatError):
    """An operation that needs triples was given an empty split."""


class CheckpointFormatError(DataFormatError):
    """A checkpoint file is truncated or has an unknown magic/version."""
