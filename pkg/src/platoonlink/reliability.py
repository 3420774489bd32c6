"""Control-aware reliability of the wireless network.

Reliability is the probability that a packet's wireless end-to-end
delay stays within the control system's delay budget tau.  The exact
delay distribution is intractable, so two handles are provided: a
lower bound built from the mean delay (the larger of a Markov and a
Chernoff-style bound), and a transmission-dominated approximation that
evaluates the SINR CCDF at the rate threshold implied by tau.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp, log
from typing import Optional

from . import sinr as sinr_mod
from .delay import end_to_end_delay
from .exceptions import DelayBoundError, GainInfeasibleError, UnstableQueueError
from .stability import stability_report


@dataclass(frozen=True)
class ReliabilityReport:
    """Lower bound, its two ingredients, and the CCDF approximation.

    Bound fields are None when the mean delay does not satisfy the
    bound's premise; ``bound_error`` then says why.  ``which_stability``
    records which delay budget was enforced: plant, string, or both.
    """

    lower_bound: Optional[float]
    markov_term: Optional[float]
    chernoff_term: Optional[float]
    approx: Optional[float]
    tau_used: float
    which_stability: str
    mean_delay: Optional[float] = None
    bound_error: Optional[str] = None


def reliability_lower_bound(mean_delay, tau):
    """Lower bound on P(delay <= tau) from the mean delay.

    markov   = 1 - mean/tau
    chernoff = 1 - exp(mean - tau*ln(tau/mean)), clamped to [0, 1]

    The bound is the larger of the two.  Requires mean_delay < tau.
    """
    if mean_delay <= 0.0:
        raise ValueError("mean_delay must be positive")
    if mean_delay >= tau:
        raise DelayBoundError(
            f"mean delay {mean_delay:.6g} s is not below the budget "
            f"tau={tau:.6g} s; the lower bound does not apply",
            mean_delay=mean_delay, tau=tau)
    markov = 1.0 - mean_delay / tau
    chernoff = 1.0 - exp(mean_delay - tau * log(tau / mean_delay))
    chernoff = min(max(chernoff, 0.0), 1.0)
    return max(markov, chernoff), markov, chernoff


def reliability_approx(model, tau):
    """Transmission-dominated reliability approximation.

    A packet of S bits on a 1/M bandwidth share meets the delay budget
    tau exactly when the SINR exceeds 2^(S*M/(w*tau)) - 1, so the
    approximation is the CCDF at that threshold.
    """
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    theta = 2.0 ** (model.bits_per_use() / tau) - 1.0
    return sinr_mod.sinr_ccdf(theta, model)


def _tau_from_report(report, which):
    if which == "plant":
        tau = report.tau1
    elif which == "string":
        tau = report.tau2
    elif which == "both":
        tau = report.tau_min
    else:
        raise ValueError(f"unknown stability selector {which!r}")
    if tau is None:
        raise GainInfeasibleError(
            f"no delay budget available for which_stability={which!r}: "
            f"{report.diagnostics}")
    return tau


def reliability_report(spec, model, queue, k=1.01, which_stability="both",
                       moments=None):
    """Full pipeline: stability thresholds -> mean delay -> bound and
    approximation.

    ``moments`` may carry precomputed service moments to skip the
    quadrature.  A mean delay at or above the budget surfaces as
    ``bound_error`` while the approximation is still computed.
    """
    stab = stability_report(spec, k=k)
    tau = _tau_from_report(stab, which_stability)
    if moments is None:
        moments = sinr_mod.service_moments(model)
    approx = reliability_approx(model, tau)

    bound = markov = chernoff = mean_delay = None
    bound_error = None
    try:
        delay = end_to_end_delay(queue, moments)
        mean_delay = delay.end_to_end
        bound, markov, chernoff = reliability_lower_bound(mean_delay, tau)
    except (DelayBoundError, UnstableQueueError) as exc:
        bound_error = str(exc)
        if isinstance(exc, DelayBoundError):
            mean_delay = exc.mean_delay

    return ReliabilityReport(
        lower_bound=bound, markov_term=markov, chernoff_term=chernoff,
        approx=approx, tau_used=tau, which_stability=which_stability,
        mean_delay=mean_delay, bound_error=bound_error)
