"""Exception types shared across the library.

The CLI maps these onto exit codes: usage problems exit 1, data/validation
problems exit 2, broken internal contracts exit 3.
"""


class FatigueLabError(Exception):
    """Base class for all library errors."""


class InvalidSpecError(FatigueLabError):
    """A filter or configuration parameter is outside its valid range."""


class DataError(FatigueLabError):
    """Input data cannot be processed (too short, degenerate, unusable)."""


class IngestionError(DataError):
    """A manifest or CSV file failed validation; message carries file context."""


class AlignmentError(DataError):
    """Channels within a block do not cover the same time span."""


class SplitError(DataError):
    """A subject split or fold assignment cannot be constructed."""


class ContractError(FatigueLabError):
    """A caller violated an API contract (wrong rate, wrong feature names...)."""
