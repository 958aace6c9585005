"""Error taxonomy shared across the solver stack."""


class KtcyError(Exception):
    """Base class for all package-specific failures."""


class NonZeroMeanInput(KtcyError):
    """Poisson right-hand side carries a mean beyond tolerance.

    The periodic Laplacian is only invertible on mean-free data, so a
    violation here signals a solvability bug upstream, not a user error.
    """


class DegenerateMetric(KtcyError):
    """nu = AB - D^2 is not strictly positive where it must be."""


class NotPositiveDefinite(KtcyError):
    """Leading-minor test failed for a matrix required to be positive definite."""


class LineSearchFailed(KtcyError):
    """Damped Newton step length underflowed; the continuity step was too large."""


class LinearSolveStagnated(KtcyError):
    """Krylov iteration failed to reduce the linear residual within its cap."""


class MaxItersExceeded(KtcyError):
    """Newton did not reach the residual target in the allotted iterations."""


class ContinuationStalled(KtcyError):
    """Continuity step size fell below t_step_min.

    Carries the accepted portion of the path in ``states`` so callers can
    still report partial progress.
    """

    def __init__(self, message, states=None):
        super().__init__(message)
        self.states = list(states) if states is not None else []
