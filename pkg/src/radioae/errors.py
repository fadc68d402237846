"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: config/format problems
exit 2, numeric failures during a run exit 3 (usage errors exit 1 and are
raised by the argument parser itself).
"""


class ParameterError(ValueError):
    """An argument value is outside its documented domain."""


class ShapeError(ValueError):
    """Array shapes do not satisfy an operation's contract."""


class FormatError(ValueError):
    """A binary or text file does not match its declared format."""


class ConfigError(ValueError):
    """A run-config file failed validation; message carries the line number."""


class NumericError(RuntimeError):
    """A computation produced non-finite values."""
