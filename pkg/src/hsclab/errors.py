"""Exception hierarchy shared across the package."""


class HsclabError(Exception):
    """Base class for all package errors."""


class DomainError(HsclabError, ValueError):
    """An argument is outside the operation's domain (bad axis, grid mismatch, ...)."""


class ConstructionError(HsclabError, ValueError):
    """A field or metric could not be built with the requested parameters."""

    def __init__(self, message: str, *, min_eigenvalue: float | None = None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class SingularMetricError(HsclabError):
    """A metric lost positive definiteness at some grid point."""

    def __init__(self, message: str, *, point: tuple | None = None, min_eigenvalue: float | None = None):
        super().__init__(message)
        self.point = point
        self.min_eigenvalue = min_eigenvalue


class CohomologyError(HsclabError, ValueError):
    """Two metrics do not lie in the same class on the torus chart (mean mismatch)."""


class UnsupportedInputError(HsclabError, ValueError):
    """The input is valid mathematics but outside what this artifact supports."""


class OptimizerError(HsclabError):
    """Direction optimizer failed to converge; carries the best state found."""

    def __init__(self, message: str, *, best=None):
        super().__init__(message)
        self.best = best


class NonConvergenceError(HsclabError):
    """Newton continuation failed at a node; carries the best state reached."""

    def __init__(self, message: str, *, best_state=None):
        super().__init__(message)
        self.best_state = best_state


class ConfigurationError(HsclabError, ValueError):
    """A scenario or schedule is malformed (e.g. first continuation node too small)."""


class TrialPotentialError(HsclabError, ValueError):
    """A trial potential violates its admissibility condition; carries the index."""

    def __init__(self, message: str, *, index: int):
        super().__init__(message)
        self.index = index
