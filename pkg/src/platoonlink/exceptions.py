"""Exception types shared across the package.

Each class maps to one failure mode of the analysis pipeline so that the
CLI can translate failures into its exit-code taxonomy.
"""


class PlatoonLinkError(Exception):
    """Base class for all package errors."""


class ScenarioError(PlatoonLinkError):
    """Scenario file cannot be parsed or fails validation."""


class GainInfeasibleError(PlatoonLinkError):
    """Control gains violate a stability feasibility condition."""


class NonRealSpectrumError(PlatoonLinkError):
    """The plant-threshold matrix has eigenvalues with a genuinely
    complex part, so the delay bound is undefined for these gains."""


class UnstableQueueError(PlatoonLinkError):
    """A queue utilization is at or above 1; mean delay diverges."""

    def __init__(self, message, utilization=None):
        super().__init__(message)
        self.utilization = utilization


class DelayBoundError(PlatoonLinkError):
    """Mean wireless delay is not below the stability delay budget, so
    the reliability lower bound does not apply."""

    def __init__(self, message, mean_delay=None, tau=None):
        super().__init__(message)
        self.mean_delay = mean_delay
        self.tau = tau


class ProvisoFailedError(PlatoonLinkError):
    """Optimized gains do not satisfy the mean-delay proviso required
    for the lower-bound objective to coincide with the delay objective."""

    def __init__(self, message, mean_delay=None, tau_star=None):
        super().__init__(message)
        self.mean_delay = mean_delay
        self.tau_star = tau_star


class NumericalError(PlatoonLinkError):
    """A quadrature, differentiation, or eigenvalue routine failed to
    reach its accuracy target."""


class CollisionError(PlatoonLinkError):
    """A simulated headway reached zero; the trajectory is invalid."""

    def __init__(self, message, time=None, follower=None):
        super().__init__(message)
        self.time = time
        self.follower = follower


class DivergenceError(PlatoonLinkError):
    """Simulated platoon errors grew instead of settling; the delay or
    gains are outside the stable region."""


class InfeasibleBoxError(PlatoonLinkError):
    """No point of the gain search box satisfies the feasibility
    conditions; carries the list of violated constraints."""

    def __init__(self, message, violated=()):
        super().__init__(message)
        self.violated = tuple(violated)
