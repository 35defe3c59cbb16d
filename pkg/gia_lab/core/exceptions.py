"""Exception hierarchy for gia-lab.

PreconditionError subclasses mean the caller supplied something invalid
(the CLI maps them to exit code 2); NumericalError subclasses are runtime
failures (exit code 1).
"""
from typing import Any, List, Optional


class GiaLabError(Exception):
    """Base class for all package errors."""


class PreconditionError(GiaLabError):
    """Inputs or configuration violate an operation's preconditions."""


class ShapeError(PreconditionError):
    """Tensor shapes are incompatible with an operation."""


class GraphError(PreconditionError):
    """A computation graph was used incorrectly."""


class ConfigError(PreconditionError):
    """Invalid configuration value or file."""


class DatasetError(PreconditionError):
    """A dataset could not be read or does not fit the request."""


class ContainerFormatError(PreconditionError):
    """A binary update container is corrupt or has the wrong version."""


class InconsistentStatSourceError(PreconditionError):
    """The requested statistic source is not supported by the client update."""


class NumericalError(GiaLabError):
    """A computation failed at runtime."""


class NonFiniteError(NumericalError):
    """A graph node evaluated to NaN or infinity."""

    def __init__(self, message: str, node_id: Optional[int] = None, op: Optional[str] = None):
        super().__init__(message)
        self.node_id = node_id
        self.op = op


class InconsistentStatisticsError(NumericalError):
    """Running-statistic snapshots do not admit a valid batch variance."""


class AttackDivergedError(NumericalError):
    """The attack objective became non-finite."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


class SearchFailedError(NumericalError):
    """Every trial of a search diverged."""

    def __init__(self, message: str, records: List[Any]):
        super().__init__(message)
        self.records = records
