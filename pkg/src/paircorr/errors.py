"""Exception hierarchy shared across the package.

Domain errors (bad arguments to pure functions) raise plain ``ValueError``;
the classes below cover failures that cross module boundaries and map onto
CLI exit codes.
"""


class PairCorrError(Exception):
    """Base class for package-specific failures."""


class DataError(PairCorrError):
    """Malformed or invalid input data (files, datasets)."""


class IntegrityError(PairCorrError):
    """Result assembly saw a duplicated or missing tile."""


class VerificationError(PairCorrError):
    """Engine output disagreed with the brute-force oracle."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ProtocolError(PairCorrError):
    """Malformed frame on the worker wire protocol."""


class WorkerError(PairCorrError):
    """A worker failed; carries which one and what was left undone."""

    def __init__(self, message, worker_index=None, unfinished_range=None):
        super().__init__(message)
        self.worker_index = worker_index
        self.unfinished_range = unfinished_range


class PipelineError(PairCorrError):
    """A result sink failed mid-run; carries the offending pass range."""

    def __init__(self, message, pass_range=None):
        super().__init__(message)
        self.pass_range = pass_range
