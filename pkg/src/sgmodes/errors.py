"""Exception hierarchy shared by the solvers."""


class SgmError(Exception):
    """Base class for all errors raised by :mod:`sgmodes`."""


class DomainError(SgmError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class PrecisionError(SgmError, ArithmeticError):
    """The requested tolerance cannot be met at the current mantissa width.

    Callers are expected to retry with a wider :class:`PrecisionContext`;
    nothing in the package escalates precision silently.
    """


class BracketError(SgmError, RuntimeError):
    """A root bracket could not be established."""


class ConvergenceError(SgmError, RuntimeError):
    """An iteration stopped before meeting its tolerance.

    ``best`` holds the last iterate and ``residual`` its residual norm.
    """

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class SingularSystemError(SgmError, ArithmeticError):
    """Boundary matching hit an exact spectral singularity ("at-singularity")."""


class NoRootError(SgmError, LookupError):
    """A requested branch does not exist (for example ``q > q_max``)."""


class ConditionViolation(SgmError, ValueError):
    """Parameters leave the regime ``zeta > nu > x >> 1 >> |kappa|``."""
