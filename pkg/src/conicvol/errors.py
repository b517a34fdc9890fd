"""Exception types raised across the package."""


class ConicError(Exception):
    """Base class for every error raised by conicvol."""


class ShapeError(ConicError, ValueError):
    """Array shape or dimension does not match what the operation needs."""


class ParameterError(ConicError, ValueError):
    """A parameter lies outside its admissible range."""


class DomainError(ConicError, ValueError):
    """A function was evaluated outside its mathematical domain."""


class BracketError(ConicError, ValueError):
    """Root bracket endpoints do not enclose a sign change."""


class CapabilityError(ConicError, NotImplementedError):
    """The operation is not available for this cone variant."""


class DegenerateError(ConicError, ValueError):
    """Input describes a degenerate case (zero variance, zero dimension...)."""


class InvariantError(ConicError, ArithmeticError):
    """A mathematical invariant that must hold was found violated."""


class DivergenceError(ConicError, RuntimeError):
    """An iterative procedure failed to find a bounded minimizer."""
