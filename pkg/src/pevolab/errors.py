"""Exception hierarchy shared by all pevolab modules."""


class PevoError(Exception):
    """Base class for every error raised by pevolab."""


class InvalidInputError(PevoError, ValueError):
    """Malformed input: wrong length, mismatched grids, non-finite samples."""


class ParameterError(PevoError, ValueError):
    """A scalar parameter is outside its admissible range."""


class DomainError(PevoError, ValueError):
    """A symbol or multiplier is not finite at some evaluation point."""


class PreconditionError(PevoError, ValueError):
    """An operation was called outside the hypotheses it requires."""


class DivergenceError(PevoError, ArithmeticError):
    """A series or iteration that must contract does not."""


class BlowUpError(PevoError, ArithmeticError):
    """A time integration exceeded its growth guard."""


class StabilityError(PevoError, ValueError):
    """Requested time step violates the explicit stability rule."""


class NoConvergenceError(PevoError, ArithmeticError):
    """Fixed-point iteration failed to converge down to the minimal horizon."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InconsistencyError(PevoError, ArithmeticError):
    """A computed quantity contradicts an identity it must satisfy."""
