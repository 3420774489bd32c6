"""Domain types and the optimal-velocity control law.

Everything here is an immutable value object or a pure function; all
quantities are SI (meters, seconds, watts, hertz, bits).  Config files
may use other units (dBm, MHz) but are normalized before these types
are constructed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PlatoonSpec:
    """Platoon geometry and control parameters.

    Parameters
    ----------
    follower_count : int
        Number of followers M behind the leader (M >= 1).
    target_spacing : float
        Desired headway between consecutive vehicles [m].
    target_velocity : float
        Desired platoon cruising speed [m/s].
    gain_a : float
        Controller gain on the headway-velocity mismatch [1/s].
    gain_b : float
        Controller gain on the predecessor velocity mismatch [1/s].
    v_max : float
        Free-flow speed of the headway-velocity map [m/s].
    d_sparse : float
        Headway above which the map saturates at ``v_max`` [m].
    d_dense : float
        Headway below which the map returns zero [m].
    """

    follower_count: int
    target_spacing: float
    target_velocity: float
    gain_a: float
    gain_b: float
    v_max: float
    d_sparse: float
    d_dense: float

    def __post_init__(self):
        if self.follower_count < 1:
            raise ValueError("follower_count must be >= 1")
        if not 0.0 < self.d_dense < self.d_sparse:
            raise ValueError("need 0 < d_dense < d_sparse")
        if not 0.0 < self.target_velocity <= self.v_max:
            raise ValueError("need 0 < target_velocity <= v_max")
        if self.gain_a <= 0.0:
            raise ValueError("gain_a must be positive")
        if self.gain_b < 0.0:
            raise ValueError("gain_b must be nonnegative")
        if self.target_spacing <= 0.0:
            raise ValueError("target_spacing must be positive")


@dataclass(frozen=True)
class HighwayScene:
    """Lane layout and interferer densities around the platoon.

    ``lane_densities`` gives one density per lane, indexed 1..N; the
    platoon lane's own entry must be zero (its traffic is described by
    ``ahead_density`` / ``behind_density`` instead).  ``dist_to_head``
    and ``dist_to_tail`` locate the tagged receiving vehicle inside the
    platoon: ahead-of-platoon interferers start at ``dist_to_head``
    meters in front of it, behind-platoon ones at ``dist_to_tail``
    meters behind.  ``segment_length`` truncates Monte Carlo sampling.
    """

    lane_count: int
    lane_width: float
    platoon_lane: int
    lane_densities: tuple[float, ...]
    ahead_density: float
    behind_density: float
    dist_to_head: float
    dist_to_tail: float
    segment_length: float = 10_000.0

    def __post_init__(self):
        if not 1 <= self.platoon_lane <= self.lane_count:
            raise ValueError("platoon_lane must lie in 1..lane_count")
        if len(self.lane_densities) != self.lane_count:
            raise ValueError("lane_densities must have one entry per lane")
        if any(d < 0.0 for d in self.lane_densities):
            raise ValueError("densities must be nonnegative")
        if self.lane_densities[self.platoon_lane - 1] != 0.0:
            raise ValueError("platoon lane density entry must be zero")
        if self.ahead_density < 0.0 or self.behind_density < 0.0:
            raise ValueError("densities must be nonnegative")
        if self.lane_width <= 0.0:
            raise ValueError("lane_width must be positive")
        if self.dist_to_head < 0.0 or self.dist_to_tail < 0.0:
            raise ValueError("head/tail distances must be nonnegative")
        if self.segment_length <= 0.0:
            raise ValueError("segment_length must be positive")

    def interfering_lanes(self):
        """(lateral offset [m], density [veh/m]) for each non-platoon lane."""
        out = []
        for lane in range(1, self.lane_count + 1):
            if lane == self.platoon_lane:
                continue
            offset = abs(self.platoon_lane - lane) * self.lane_width
            out.append((offset, self.lane_densities[lane - 1]))
        return out


@dataclass(frozen=True)
class RadioSpec:
    """Physical-layer parameters of the V2V links.

    ``noise_psd`` is a one-sided power spectral density [W/Hz]; the
    noise power seen by a link is ``noise_psd`` times the per-link
    bandwidth, which callers derive from ``total_bandwidth`` and the
    platoon size.  ``pathloss_alpha`` must exceed 2 or the lateral-lane
    interference integrals diverge.  ``nakagami_beta`` is the integer
    shape of the desired link's fading-power distribution.
    """

    tx_power: float
    pathloss_alpha: float
    nakagami_beta: int
    total_bandwidth: float
    noise_psd: float
    packet_size: float
    link_distance: float

    def __post_init__(self):
        if self.tx_power <= 0.0:
            raise ValueError("tx_power must be positive")
        if self.pathloss_alpha <= 2.0:
            raise ValueError("pathloss_alpha must exceed 2")
        if int(self.nakagami_beta) != self.nakagami_beta or self.nakagami_beta < 1:
            raise ValueError("nakagami_beta must be an integer >= 1")
        if self.total_bandwidth <= 0.0:
            raise ValueError("total_bandwidth must be positive")
        if self.noise_psd < 0.0:
            raise ValueError("noise_psd must be nonnegative")
        if self.packet_size <= 0.0:
            raise ValueError("packet_size must be positive")
        if self.link_distance <= 0.0:
            raise ValueError("link_distance must be positive")


@dataclass(frozen=True)
class QueueSpec:
    """Arrival and processor-service rates of the per-vehicle queue."""

    arrival_rate: float
    processor_rate: float

    def __post_init__(self):
        if not self.processor_rate > self.arrival_rate > 0.0:
            raise ValueError("need processor_rate > arrival_rate > 0")


@dataclass(frozen=True)
class VehicleState:
    """Position and velocity of one vehicle."""

    position: float
    velocity: float

    def __post_init__(self):
        if self.velocity < 0.0:
            raise ValueError("velocity must be nonnegative")


def headway_velocity(d, spec):
    """Headway-dependent velocity map.

    Zero below ``d_dense``, the free-flow speed ``v_max`` above
    ``d_sparse``, and a linear ramp in between; continuous at both
    knees.  Accepts scalars or arrays.

    Parameters
    ----------
    d : float or ndarray
        Headway [m], nonnegative.
    spec : PlatoonSpec
    """
    ramp = (np.asarray(d, dtype=float) - spec.d_dense) / (spec.d_sparse - spec.d_dense)
    out = spec.v_max * np.clip(ramp, 0.0, 1.0)
    if np.ndim(d) == 0:
        return float(out)
    return out


def control_accel(state, pred_delayed, spec, delayed_headway=None):
    """Commanded acceleration of a follower.

    ``gain_a`` acts on the difference between the headway-mapped
    velocity and the vehicle's own current speed; ``gain_b`` acts on
    the velocity difference to the predecessor as last received.

    ``pred_delayed`` is the predecessor state at the (delayed) time the
    information was sent.  The headway fed to the velocity map is the
    one at that same delayed instant; when the caller has the
    follower's own position history (the platoon simulator does), it
    should pass that headway via ``delayed_headway``.  Otherwise the
    difference of the two given positions is used.
    """
    if delayed_headway is None:
        delayed_headway = pred_delayed.position - state.position
    v_map = headway_velocity(delayed_headway, spec)
    return (spec.gain_a * (v_map - state.velocity)
            + spec.gain_b * (pred_delayed.velocity - state.velocity))


def errors(states, spec):
    """Spacing and velocity errors of every vehicle, leader first.

    The leader defines the reference, so its own errors are zero by
    definition.  Returns two arrays aligned with ``states``.
    """
    if len(states) < 2:
        raise ValueError("need a leader and at least one follower")
    x = np.array([s.position for s in states], dtype=float)
    v = np.array([s.velocity for s in states], dtype=float)
    delta = np.zeros(len(states))
    delta[1:] = x[:-1] - x[1:] - spec.target_spacing
    z = v - spec.target_velocity
    z[0] = 0.0
    return delta, z
