"""Exception hierarchy shared by every module of the package."""


class CertifyError(Exception):
    """Base class for all package errors."""


class InvalidInputError(CertifyError, ValueError):
    pass


class MomentUnavailableError(CertifyError, KeyError):
    """A bound formula needs a moment that was neither supplied nor derivable."""

    def __init__(self, moment, formula):
        self.moment = moment
        self.formula = formula
        super().__init__(f"moment {moment!r} unavailable; required by {formula}")

    def __str__(self):
        return self.args[0]


class UnsupportedRegimeError(CertifyError, ValueError):
    pass


class InfeasibleError(CertifyError):
    pass


class OptimizationError(CertifyError):
    pass


class ConvergenceError(CertifyError):
    pass


class InsufficientDataError(CertifyError):
    pass


class MinorizationViolationError(CertifyError):
    """Observed beta * nu(y) > p(y | x) for a state x in the small set."""

    def __init__(self, x, y, ratio):
        self.x = x
        self.y = y
        self.ratio = ratio
        super().__init__(
            f"model violates minorization: beta*nu(y)/p(y|x) = {ratio:.6g} > 1 at x={x!r}, y={y!r}"
        )


class InadmissibleSmallSetError(CertifyError, ValueError):
    pass


class ConstructionError(CertifyError):
    pass


class ModelError(CertifyError):
    pass
