"""
utils/errors.py: exception hierarchy

Nodes catch these and turn them into `PipelineState.error`; library code raises them directly.
"""

from __future__ import annotations


class AvrError(Exception):
    """Root of every error raised by this project."""


class DimensionError(AvrError):
    """Shapes (or a modality's feature width) do not line up."""


class DomainError(AvrError):
    """Argument outside the operation's domain (e.g. reduce over an empty tensor)."""


class ContractError(AvrError):
    """Caller broke an API contract: non-scalar loss, optimizer/param mismatch, checkpoint/config mismatch."""


class DataValidationError(AvrError):
    """Bad values in a dataset, label vector or one-hot matrix."""


class PairingError(DataValidationError):
    """Audio, visual and label files disagree on the number of rows."""


class DegenerateInputError(AvrError):
    """Correlation requested on an input with zero variance."""


class NumericalError(AvrError):
    """Linear-algebra failure, e.g. singular covariance with no ridge."""


class TrainingDivergedError(AvrError):
    """A loss term became NaN/Inf during training."""

    def __init__(self, term: str, epoch: int, value: float):
        self.term  = term
        self.epoch = epoch
        self.value = value
        super().__init__(f"loss term '{term}' is non-finite ({value}) at epoch {epoch}")


class FormatError(AvrError):
    """Binary file with wrong magic bytes, version or truncated payload."""


class ConfigError(AvrError):
    """Unknown key or unparsable value in a run config file or flag."""


class PipelineError(AvrError):
    """A pipeline run stopped at a failed node; carries the node's stage and message."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"{stage}: {message}")
