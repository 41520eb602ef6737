"""Exception hierarchy. Every class carries a stable ``code`` string used by the CLI."""


class QFIError(Exception):
    code = "qfi-error"


class ArgumentError(QFIError, ValueError):
    code = "invalid-argument"


class MalformedInputError(QFIError, ValueError):
    code = "malformed-input"


class InvalidStateError(QFIError, ValueError):
    code = "invalid-state"


class NonSquareError(InvalidStateError):
    code = "non-square"


class NonFiniteError(InvalidStateError):
    code = "non-finite"


class NotHermitianError(InvalidStateError):
    code = "not-hermitian"


class TraceViolationError(InvalidStateError):
    code = "trace-violation"


class NotPSDError(InvalidStateError):
    code = "not-psd"


class ZeroRankError(QFIError, ValueError):
    code = "zero-rank"


class InvalidChannelError(QFIError, ValueError):
    code = "invalid-channel"


class InvalidMeasurementError(QFIError, ValueError):
    code = "invalid-measurement"


class SingularDistributionError(QFIError, ArithmeticError):
    """An outcome with vanishing probability but non-vanishing derivative."""

    code = "singular-distribution"


class IncompatibleNSLDError(QFIError, ValueError):
    code = "incompatible-nsld"


class InconsistentDerivativeError(QFIError, ValueError):
    code = "inconsistent-derivative"


class UnboundedError(QFIError, ArithmeticError):
    """The derivative has weight outside the support of the state."""

    code = "unbounded"


class PreconditionError(QFIError, ValueError):
    code = "precondition-violated"


class SingularStateError(QFIError, ArithmeticError):
    code = "singular-state"


class InstabilityError(QFIError, ArithmeticError):
    code = "integrator-instability"


class DivergentError(QFIError, ArithmeticError):
    code = "divergent"


class DivergentThresholdError(DivergentError):
    code = "divergent-threshold"


class DivergentBoundError(DivergentError):
    code = "divergent-bound"
