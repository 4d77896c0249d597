"""Exception hierarchy shared by every stage of the pipeline.

The CLI maps these onto its stable exit codes: DatasetError -> 2,
MissingInputError -> 3, MetricUndefinedError -> 4.
"""


class CueError(Exception):
    """Base class for all errors raised by this package."""


class DatasetError(CueError):
    """Input data violates a schema, invariant, or operation precondition."""


class MissingInputError(CueError):
    """A required input file is absent or unreadable."""


class MetricUndefinedError(CueError):
    """A metric has no defined value on the given data (e.g. one-class AUROC)."""
