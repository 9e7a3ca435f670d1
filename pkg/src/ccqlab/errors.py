"""Exception hierarchy shared by all ccqlab modules."""


class CcqError(Exception):
    """Base class for every error raised by ccqlab."""


class NonSquare(CcqError, ValueError):
    pass


class NotHermitian(CcqError, ValueError):
    pass


class NotPSD(CcqError, ValueError):
    pass


class NumericalFailure(CcqError, ArithmeticError):
    pass


class DimensionOverflow(CcqError, ValueError):
    """Raised when a tensor power would exceed the configured ``max_dim``."""

    def __init__(self, dim, n, max_dim):
        self.dim, self.n, self.max_dim = dim, n, max_dim
        super().__init__(f"dimension {dim}**{n} = {dim ** n} exceeds max_dim={max_dim}")


class SizeMismatch(CcqError, ValueError):
    pass


class LengthMismatch(CcqError, ValueError):
    pass


class UnreachableOutput(CcqError, ValueError):
    pass


class InvalidAlpha(CcqError, ValueError):
    pass


class RateTooLow(CcqError, ValueError):
    pass


class NoPositiveExponent(CcqError, ValueError):
    pass


class BudgetExceeded(CcqError, ValueError):
    pass


class EnumerationBudgetExceeded(CcqError, ValueError):
    pass


class BoundViolated(CcqError, AssertionError):
    """A theorem-level inequality failed; ``witness`` holds the offending data."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class RateInfeasible(CcqError, ValueError):
    pass


class InfeasibleBlocklength(CcqError, ValueError):
    pass


class MessageOutOfRange(CcqError, IndexError):
    pass


class PartitionArityError(CcqError, ValueError):
    pass


class ConfigInvalid(CcqError, ValueError):
    """Config validation failure; ``errors`` maps field paths to messages."""

    def __init__(self, errors):
        self.errors = dict(errors)
        lines = "; ".join(f"{k}: {v}" for k, v in self.errors.items())
        super().__init__(f"invalid config: {lines}")
