"""Exception hierarchy shared by all modules."""


class NldlabError(Exception):
    """Base class for all package errors."""


class ValidationError(NldlabError):
    """Inconsistent or ill-formed input (specs, grids, configs, data)."""


class NotApplicable(NldlabError):
    """The requested quantity does not exist for this equation family."""


class NoFiniteMassSelfSimilar(NldlabError):
    """Similarity exponents diverge: no finite-mass self-similar solution."""


class PreconditionFailed(NldlabError):
    """A named precondition on exponent vectors is violated."""

    def __init__(self, condition: str, message: str = ""):
        self.condition = condition
        super().__init__(f"{condition}: {message}" if message else condition)


class RangeError(NldlabError):
    """Parameters outside the validity range of a closed-form solution."""


class NumericalError(NldlabError):
    """A numerical procedure failed or two independent routes disagree."""


class TimeWindowError(NldlabError):
    """Evaluation time outside the validity window of a solution."""


class DivergentMass(NldlabError):
    """The mass integral does not converge for these parameters."""


class ResolutionError(NldlabError):
    """Grid too coarse (or padding too small) to resolve the profile."""


class StepRejected(NldlabError):
    """A time step failed to converge; the caller should reduce dt."""
