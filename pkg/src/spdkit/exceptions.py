"""Exception hierarchy for spdkit."""


class SPDKitError(Exception):
    """Base class for all errors raised by spdkit."""


class NotSPDError(SPDKitError, ValueError):
    """Input matrix is not symmetric positive definite."""


class NumericalError(SPDKitError, ArithmeticError):
    """A numerical routine failed (non-convergence, overflow, ...)."""


class ExpOverflowError(NumericalError, OverflowError):
    """Argument of an exponential exceeds the double precision range."""


class PSDCertificationError(NumericalError):
    """A kernel matrix failed the positive semidefiniteness check."""


class DegenerateTrainingError(SPDKitError, ValueError):
    """Training data cannot support the requested model."""
