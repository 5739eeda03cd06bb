"""
Exception hierarchy.

Every error carries a human-readable ``detail`` and the process ``exit_code``
the command line reports when the error escapes a command.
"""


class KrigError(Exception):
    """Base class for all library errors."""

    exit_code: int = 1

    def __init__(self, detail: str, exit_code: int | None = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class DomainError(KrigError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 2


class InputFormatError(KrigError):
    """A file could not be parsed."""

    exit_code = 2


class NotPositiveDefinite(KrigError):
    """Cholesky factorization failed even after jitter."""

    exit_code = 4


class NegativeRadicand(KrigError):
    exit_code = 4


class NegativeVarianceFactor(KrigError):
    exit_code = 4


class QuadratureDivergence(KrigError):
    exit_code = 4


class NonUniqueStationary(KrigError):
    """The Gibbs transition has more than one closed communicating class."""

    exit_code = 3


class SolverFailure(KrigError):
    exit_code = 4


class OptimFailure(KrigError):
    exit_code = 4


class SamplerFailure(KrigError):
    exit_code = 4


class ReplicationAbort(KrigError):
    """Too many replications of an experiment failed."""

    exit_code = 5
