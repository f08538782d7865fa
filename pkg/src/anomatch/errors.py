"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3.
"""


class AnomatchError(Exception):
    """Base class for all package errors."""


class ConfigError(AnomatchError):
    """Invalid configuration: bad preset, out-of-range parameter, unresolvable path."""


class DataError(AnomatchError):
    """Invalid or inconsistent data: shape drift, missing tensors, bad values."""


class TensorFormatError(DataError):
    """A tensor file does not conform to the on-disk format."""


class BadMagicError(TensorFormatError):
    """File does not start with the tensor magic bytes."""


class VersionError(TensorFormatError):
    """Tensor magic recognised but the format version is unsupported."""


class TruncatedError(TensorFormatError):
    """Payload ends before the header-declared element count."""


class PayloadMismatchError(TensorFormatError):
    """Header dimensions disagree with the payload length."""


class BankLockError(DataError):
    """Could not acquire the single-writer lock on a bank directory."""
