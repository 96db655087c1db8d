"""Exception hierarchy shared by all modules."""


class MulticubicError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MulticubicError, ValueError):
    """An argument lies outside the domain of an operation (arity, index, range)."""


class UnsupportedExponentError(DomainError):
    """The critical exponent (alpha == 3n, or sum p_ij == 3n) was requested."""


class SingularityError(DomainError):
    """A control or noise term is singular at the requested point (0 ** negative)."""


class DivergenceError(MulticubicError):
    """A series that must converge was detected to diverge."""


class ModelParseError(MulticubicError, ValueError):
    """A model or request file does not conform to its schema."""

    def __init__(self, message, context=None):
        self.context = context
        if context:
            message = f"{context}: {message}"
        super().__init__(message)
