"""Exception hierarchy shared across the toolkit.

InputError covers bad files, bad flags, and bad data (CLI exit code 2);
TrainingError covers runtime failures such as numeric divergence (exit 1).
"""


class MixsentError(Exception):
    """Base class for all toolkit errors."""


class InputError(MixsentError):
    """Malformed or missing input: files, labels, flags, model references."""


class TrainingError(MixsentError):
    """Training-time failure, e.g. non-finite loss or weights."""
