"""Exception types shared across the toolkit.

`exit_code` maps onto the CLI exit-status contract: 2 for user errors
(bad inputs, infeasible requests), 3 for internal failures.
"""


class ScomError(Exception):
    exit_code = 3


class InputError(ScomError):
    """Rejected input: wrong shapes, out-of-range values, bad arguments."""

    exit_code = 2


class IngestionError(InputError):
    """Schema or data file failed to parse or validate."""


class OracleError(InputError):
    """An oracle table could not be constructed from the dataset."""


class CheckpointError(InputError):
    """Checkpoint is corrupt or incompatible with the given schema."""


class ConstraintError(InputError):
    """Selection constraints (k, locked-in, excluded) are infeasible."""


class EstimatorError(InputError):
    """Requested estimator does not support the given concept kinds."""
