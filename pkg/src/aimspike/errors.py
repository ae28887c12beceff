"""Exception types shared across the package."""


class AimSpikeError(Exception):
    """Base class for all package-specific errors."""


class DomainError(AimSpikeError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class ConfigurationError(AimSpikeError, ValueError):
    """Parameter combination is rejected (e.g. spike ansatz with lambda = 0)."""


class NumericError(AimSpikeError, ArithmeticError):
    """A numerical computation produced no usable result."""


class AccuracyError(NumericError):
    """An oracle could not certify the requested tolerance.

    Carries both raw values so the caller can judge the disagreement.
    """

    def __init__(self, message, values=()):
        super().__init__(message)
        self.values = tuple(values)


class RootLostError(NumericError):
    """No root of the termination determinant near the previous estimate."""


class BracketError(NumericError):
    """A bracketing interval does not enclose a sign change."""


class DegenerateStateError(NumericError):
    """Iteration state collapsed to zero; nothing left to normalize."""


class JetExhaustionError(AimSpikeError, RuntimeError):
    """A derivative order beyond the planned jet horizon was requested.

    Internal error: indicates the iteration horizon was sized wrongly.
    """


class PoleError(NumericError):
    """The ratio s_n/lambda_n was evaluated at a zero of lambda_n."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class ReconstructionError(NumericError):
    """Eigenfunction reconstruction failed along the integration path."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location
