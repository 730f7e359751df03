"""Exception hierarchy shared by every mixlab module."""


class MixlabError(Exception):
    """Base class for all mixlab errors."""


class ValidationError(MixlabError, ValueError):
    """Invalid user input: parameters out of range, malformed files."""


class UnsupportedRegimeError(ValidationError):
    """The requested quantity has no limit law for this diffusion exponent."""


class NumericalInconsistencyError(MixlabError, ArithmeticError):
    """A numerical check failed (non-convergence, impossible value)."""


class ConvergenceError(NumericalInconsistencyError):
    """A series or quadrature did not reach the requested accuracy."""
