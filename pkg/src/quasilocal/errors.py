"""Exception hierarchy shared by every module of the package."""


class QuasilocalError(Exception):
    """Base class for all errors raised by :mod:`quasilocal`."""


class InvalidInput(QuasilocalError, ValueError):
    """Malformed, non-finite or dimensionally inconsistent input."""


class InvalidCovariance(InvalidInput):
    """Matrix is not a valid (symmetric, positive, physical) covariance."""


class NumericalFailure(QuasilocalError, ArithmeticError):
    """An eigensolver or linear solve failed, or a residual check did not hold."""


class NoUniqueSteadyState(QuasilocalError):
    """The drift matrix is not Hurwitz, so the Lyapunov equation is not uniquely solvable.

    Attributes:
        eigenvalue: the eigenvalue with the largest real part.
    """

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class TheoremHypothesisViolated(QuasilocalError):
    """A certification found the extended drift non-Hurwitz although its hypothesis held."""


class InvalidPolicy(InvalidInput):
    """Integration or stage policy rejected (e.g. step too large for the drift)."""


class UnstableIntegration(QuasilocalError):
    """Covariance integration diverged."""


class DecompositionViolation(NumericalFailure):
    """A decomposition N = R U produced a factor violating its structural contract."""


class StageTimeout(QuasilocalError):
    """A switching stage did not reach its fixed point within ``max_duration``.

    Attributes:
        stage: 1-based index of the stage.
        residual: Frobenius distance of the stage mode block to its target at timeout.
    """

    def __init__(self, message, stage=None, residual=None):
        super().__init__(message)
        self.stage = stage
        self.residual = residual


class NoInteriorOptimum(QuasilocalError):
    """The optimisation problem has no interior maximum (e.g. zero decoherence)."""


class OutOfModel(QuasilocalError):
    """Parameters fall outside the range where a closed form is valid."""
