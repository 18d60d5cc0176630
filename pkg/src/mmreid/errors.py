"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line can map failures
to distinct process exit statuses without inspecting messages.
"""

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FORMAT = 3
EXIT_PROTOCOL = 4


class MMReIDError(Exception):
    exit_code = 1


class ConfigError(MMReIDError, ValueError):
    """Invalid parameters, shapes or arguments."""

    exit_code = EXIT_CONFIG


class DimensionMismatch(ConfigError):
    def __init__(self, left, right, what="feature vectors"):
        self.left = left
        self.right = right
        super().__init__(f"dimension mismatch between {what}: {left} != {right}")


class ProtocolError(MMReIDError):
    """A retrieval or split protocol precondition is violated."""

    exit_code = EXIT_PROTOCOL


class KinkError(ProtocolError):
    """Finite differences would straddle a non-differentiable point."""


class FormatError(MMReIDError):
    """Malformed feature, split or map file.

    ``code`` is a stable short identifier documented in the README.
    """

    exit_code = EXIT_FORMAT
    code = "format"

    def __init__(self, message, path=None):
        self.path = path
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class BadMagic(FormatError):
    code = "bad-magic"


class UnsupportedVersion(FormatError):
    code = "bad-version"


class TruncatedPayload(FormatError):
    code = "truncated"


class TrailingBytes(FormatError):
    code = "trailing-bytes"


class NonFiniteFeature(FormatError):
    code = "non-finite"


class ZeroDimension(FormatError):
    code = "zero-dimension"


class BadRecord(FormatError):
    code = "bad-record"
