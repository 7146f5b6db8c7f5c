"""Exception hierarchy shared across the toolkit.

The command line layer maps these onto process exit codes:
ConfigError -> 1, DataError -> 2, NumericalError -> 3.
"""


class TokalignError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(TokalignError):
    """Invalid configuration or usage."""


class DataError(TokalignError):
    """Malformed, empty, or inconsistent input data."""


class NumericalError(TokalignError):
    """Numerical degeneracy detected during training."""


class UncoverableWord(TokalignError):
    """A tokenizer produced an unknown-token placeholder for a word.

    Callers catch this to exclude the word from downstream counts
    rather than treating it as a fatal condition.
    """
