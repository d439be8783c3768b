"""Error taxonomy shared across the package.

The CLI maps these onto exit codes: configuration errors exit 1, data
errors exit 2, numeric errors exit 3.
"""


class ConfigurationError(Exception):
    """Invalid configuration: clashing fields, bad flag values, dim mismatches."""


class ShapeError(ConfigurationError):
    """Tensor/layer shape mismatch."""


class DataError(Exception):
    """Problem with input data: bad labels, missing keys, malformed files."""


class SchemaError(DataError):
    """A file is structurally unusable (missing column, empty, bad header)."""


class RowError(DataError):
    """A single data row is invalid."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class FormatError(DataError):
    """A binary container (SEB1, SMC1) failed to parse."""


class NumericError(Exception):
    """A non-finite value surfaced during training."""

    def __init__(self, message: str, batch_index: int | None = None):
        super().__init__(message)
        self.batch_index = batch_index
