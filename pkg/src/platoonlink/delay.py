"""End-to-end delay of the tandem queue inside a transmitting vehicle.

Sensor packets arrive as a Poisson stream of rate lambda_a, pass an
M/M/1 processor queue (rate mu1), and then an M/G/1 transceiver queue
whose service time is the packet transmission time D determined by the
wireless channel.  The processor's departures stay Poisson, so the
transceiver queue sees Poisson arrivals at the same rate and the mean
sojourn follows the Pollaczek-Khinchine formula.
"""

from __future__ import annotations

from dataclasses import dataclass

from .exceptions import UnstableQueueError


@dataclass(frozen=True)
class DelayReport:
    """Mean delays of both queues and their sum."""

    t1_mean: float
    t2_mean: float
    end_to_end: float
    rho2: float

    def __post_init__(self):
        if abs(self.end_to_end - (self.t1_mean + self.t2_mean)) > 1e-12 * self.end_to_end:
            raise ValueError("end_to_end must equal t1_mean + t2_mean")
        if min(self.t1_mean, self.t2_mean, self.end_to_end) <= 0.0:
            raise ValueError("delays must be positive")
        if not 0.0 <= self.rho2 < 1.0:
            raise ValueError("rho2 must lie in [0, 1)")


def processor_delay(queue):
    """Mean packet delay at the processor queue:
    lambda_a/(mu1*(mu1-lambda_a)) + 1/mu1."""
    lam, mu1 = queue.arrival_rate, queue.processor_rate
    if mu1 <= lam:
        raise UnstableQueueError(
            f"processor queue unstable: mu1={mu1} <= lambda_a={lam}",
            utilization=lam / mu1)
    return lam / (mu1 * (mu1 - lam)) + 1.0 / mu1


def transceiver_delay(queue, moments):
    """Mean packet delay at the transceiver queue via
    Pollaczek-Khinchine:
    (rho2 + lambda_a*mu2*Var(D)) / (2*(mu2 - lambda_a)) + 1/mu2."""
    lam = queue.arrival_rate
    mu2 = moments.service_rate
    rho2 = moments.utilization(lam)
    if rho2 >= 1.0:
        raise UnstableQueueError(
            f"transceiver queue unstable: utilization rho2={rho2:.4g} >= 1 "
            f"(wireless service too slow for the arrival rate)",
            utilization=rho2)
    waiting = (rho2 + lam * mu2 * moments.variance) / (2.0 * (mu2 - lam))
    return waiting + 1.0 / mu2


def end_to_end_delay(queue, moments):
    """Combine both queues into a DelayReport."""
    t1 = processor_delay(queue)
    t2 = transceiver_delay(queue, moments)
    return DelayReport(t1_mean=t1, t2_mean=t2, end_to_end=t1 + t2,
                       rho2=moments.utilization(queue.arrival_rate))
