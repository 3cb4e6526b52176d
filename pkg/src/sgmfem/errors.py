"""Exception types raised by the solver stack."""


class SGMFEMError(Exception):
    """Base class for all package errors."""


class ParameterError(SGMFEMError, ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class CoefficientError(SGMFEMError, ValueError):
    """The Young's modulus expansion is not uniformly positive."""


class DetailSpaceError(SGMFEMError):
    """A detail space is degenerate (singular Gram matrix)."""


class ConfigurationError(SGMFEMError):
    """Inconsistent solver configuration, e.g. an indefinite preconditioner."""


class UnsupportedProblemError(SGMFEMError):
    """Operation requested for a problem that does not support it."""


class NonConvergenceError(SGMFEMError, RuntimeError):
    """Iterative solver hit its iteration cap.

    The residual history is attached so callers can inspect stagnation.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
