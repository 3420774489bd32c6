"""Simulation oracles: platoon dynamics with delayed coupling, Poisson
Monte Carlo interference sampling, and a tandem-queue discrete-event
simulator.

These exist to validate the analytic modules: the integrator checks the
delay thresholds, the interference sampler checks the SINR CCDF and the
service moments, and the event simulator checks the queueing formulas
and the reliability bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import CollisionError
from .model import PlatoonSpec, VehicleState


# ---------------------------------------------------------------------------
# delay models for the platoon links


@dataclass(frozen=True)
class FixedDelay:
    """Every control update sees the same link delay tau."""

    tau: float

    def sample(self, rng, size):
        return np.full(size, self.tau)

    @property
    def upper(self):
        return self.tau


@dataclass(frozen=True)
class UniformDelay:
    """Per-update link delays drawn uniformly from (0, tau_max)."""

    tau_max: float

    def sample(self, rng, size):
        return rng.uniform(0.0, self.tau_max, size)

    @property
    def upper(self):
        return self.tau_max


@dataclass(frozen=True)
class EmpiricalDelay:
    """Per-update link delays resampled from observed sojourn times,
    e.g. the output of the tandem-queue simulator."""

    samples: tuple[float, ...]

    def sample(self, rng, size):
        idx = rng.integers(0, len(self.samples), size)
        return np.asarray(self.samples)[idx]

    @property
    def upper(self):
        return max(self.samples)


@dataclass(frozen=True)
class LeaderProfile:
    """Piecewise-constant leader velocity: ``initial`` until the first
    breakpoint, then each (time, velocity) step in order."""

    initial: float
    steps: tuple[tuple[float, float], ...] = ()

    def velocity(self, t):
        v = self.initial
        for when, level in self.steps:
            if t >= when:
                v = level
            else:
                break
        return v

    def position(self, t, x0):
        """Exact integral of the piecewise-constant velocity."""
        x = x0
        prev_t, v = 0.0, self.initial
        for when, level in self.steps:
            if t < when:
                break
            x += v * (when - prev_t)
            prev_t, v = when, level
        return x + v * (t - prev_t)


@dataclass(frozen=True)
class SimScenario:
    """One platoon integration run.

    ``initial_states`` is leader-first.  Per-link delays are resampled
    from ``delay_model`` at every control update (one update per time
    step) and held constant in between.  History before t=0 is frozen
    at the initial states.
    """

    spec: PlatoonSpec
    initial_states: tuple[VehicleState, ...]
    delay_model: object
    leader_profile: LeaderProfile
    duration: float
    time_step: float = 1e-3
    rng_seed: int = 0

    def __post_init__(self):
        if len(self.initial_states) != self.spec.follower_count + 1:
            raise ValueError("need leader plus follower_count states")
        if self.duration <= 0.0 or self.time_step <= 0.0:
            raise ValueError("duration and time_step must be positive")
        upper = getattr(self.delay_model, "upper", 0.0)
        if upper > 0.0 and self.time_step >= upper / 10.0:
            raise ValueError(
                "time_step must be below a tenth of the largest delay "
                "for accurate history interpolation")


@dataclass(frozen=True)
class SimTrace:
    """Time series of one run plus per-vehicle sup norms."""

    times: np.ndarray
    positions: np.ndarray        # (steps+1, vehicles), leader first
    velocities: np.ndarray
    spacing_errors: np.ndarray   # leader column identically zero
    velocity_errors: np.ndarray  # relative to the leader schedule
    sup_velocity_error: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        for arr in (self.positions, self.velocities,
                    self.spacing_errors, self.velocity_errors):
            if arr.shape[0] != n:
                raise ValueError("series lengths must match the time grid")


def simulate_platoon(scenario):
    """Integrate the delayed platoon dynamics with a fixed-step
    classical Runge-Kutta scheme.

    The leader follows its velocity schedule exactly; followers apply
    the control law to predecessor state interpolated linearly from the
    stored history at the delayed time.  Raises CollisionError when a
    headway reaches zero.
    """
    spec = scenario.spec
    m = spec.follower_count
    dt = scenario.time_step
    steps = int(round(scenario.duration / dt))
    rng = np.random.default_rng(scenario.rng_seed)

    x0 = np.array([s.position for s in scenario.initial_states])
    v0 = np.array([s.velocity for s in scenario.initial_states])
    profile = scenario.leader_profile

    hist_x = np.empty((steps + 1, m + 1))
    hist_v = np.empty((steps + 1, m + 1))
    hist_x[0] = x0
    hist_v[0] = v0

    a, b = spec.gain_a, spec.gain_b
    v_max, d_dense = spec.v_max, spec.d_dense
    ramp_width = spec.d_sparse - spec.d_dense

    # vectorized interpolation over follower links
    link_cols = np.arange(1, m + 1)       # follower columns
    pred_cols = link_cols - 1

    def delayed_states(t_delayed, filled):
        """Predecessor position/velocity and own position at per-link
        delayed times, interpolated linearly in the history filled up
        to row index ``filled``.  Times before zero use the frozen
        initial state; times past the newest row (delay below one
        step) extrapolate from the last stored segment."""
        pos = np.maximum(t_delayed / dt, 0.0)
        if filled == 0:
            idx = np.zeros(m, dtype=int)
            nxt = idx
            frac = np.zeros(m)
        else:
            idx = np.minimum(np.floor(pos).astype(int), filled - 1)
            nxt = idx + 1
            frac = pos - idx
        px = hist_x[idx, pred_cols] * (1.0 - frac) + hist_x[nxt, pred_cols] * frac
        pv = hist_v[idx, pred_cols] * (1.0 - frac) + hist_v[nxt, pred_cols] * frac
        sx = hist_x[idx, link_cols] * (1.0 - frac) + hist_x[nxt, link_cols] * frac
        return px, pv, sx

    def rhs(t, v, taus, filled):
        """Follower accelerations from delayed headway and delayed
        predecessor velocity; leader handled outside."""
        px, pv, sx = delayed_states(t - taus, filled)
        headway = px - sx
        vmap = v_max * np.clip((headway - d_dense) / ramp_width, 0.0, 1.0)
        acc = a * (vmap - v[1:]) + b * (pv - v[1:])
        dx = v.copy()
        dv = np.zeros_like(v)
        dv[1:] = acc
        return dx, dv

    x = x0.copy()
    v = v0.copy()
    for step in range(steps):
        t = step * dt
        taus = scenario.delay_model.sample(rng, m)
        filled = step

        # classical RK4 on the follower states; leader is exact
        k1x, k1v = rhs(t, v, taus, filled)
        v2 = np.maximum(v + 0.5 * dt * k1v, 0.0)
        k2x, k2v = rhs(t + 0.5 * dt, v2, taus, filled)
        v3 = np.maximum(v + 0.5 * dt * k2v, 0.0)
        k3x, k3v = rhs(t + 0.5 * dt, v3, taus, filled)
        v4 = np.maximum(v + dt * k3v, 0.0)
        k4x, k4v = rhs(t + dt, v4, taus, filled)

        x = x + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        v = np.maximum(v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v), 0.0)

        t_next = (step + 1) * dt
        x[0] = profile.position(t_next, x0[0])
        v[0] = profile.velocity(t_next)

        headways = x[:-1] - x[1:]
        if np.any(headways <= 0.0):
            bad = int(np.argmax(headways <= 0.0)) + 1
            raise CollisionError(
                f"headway of follower {bad} reached zero at t={t_next:.3f} s",
                time=t_next, follower=bad)

        hist_x[step + 1] = x
        hist_v[step + 1] = v

    times = np.arange(steps + 1) * dt
    sched_v = np.array([profile.velocity(t) for t in times])
    spacing = np.zeros_like(hist_x)
    spacing[:, 1:] = hist_x[:, :-1] - hist_x[:, 1:] - spec.target_spacing
    vel_err = hist_v - sched_v[:, None]
    vel_err[:, 0] = 0.0
    return SimTrace(times=times, positions=hist_x, velocities=hist_v,
                    spacing_errors=spacing, velocity_errors=vel_err,
                    sup_velocity_error=np.abs(vel_err).max(axis=0))


def equilibrium_states(spec, velocity=None, leader_position=0.0):
    """Steady platoon: every headway at the spacing where the velocity
    map equals the cruise speed, all vehicles at that speed."""
    v = spec.target_velocity if velocity is None else velocity
    d = spec.d_dense + (spec.d_sparse - spec.d_dense) * v / spec.v_max
    states = [VehicleState(position=leader_position, velocity=v)]
    for i in range(1, spec.follower_count + 1):
        states.append(VehicleState(position=leader_position - i * d, velocity=v))
    return tuple(states)


def perturbed_states(spec, rng, spacing_error_range=5.0,
                     velocity_error_range=3.0):
    """Initial states with spacing errors uniform in +-range and
    velocity errors uniform in +-range around the targets."""
    states = [VehicleState(position=0.0, velocity=spec.target_velocity)]
    pos = 0.0
    for _ in range(spec.follower_count):
        pos -= spec.target_spacing + rng.uniform(-spacing_error_range,
                                                 spacing_error_range)
        vel = spec.target_velocity + rng.uniform(-velocity_error_range,
                                                 velocity_error_range)
        states.append(VehicleState(position=pos, velocity=max(vel, 0.0)))
    return tuple(states)


# ---------------------------------------------------------------------------
# Monte Carlo interference sampling


def sample_sinr(model, n, seed, chunk=100_000):
    """Draw ``n`` independent SINR realizations of the tagged link.

    Each draw places Poisson interferer sets on every non-platoon lane
    (uniform over the truncation segment centered on the receiver) and
    on the platoon lane ahead of the head and behind the tail, with
    exponential interferer fading and a Gamma(beta, 1/beta) desired
    gain.  Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError("need at least one draw")
    rng = np.random.default_rng(seed)
    out = np.empty(n)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        out[done:done + m] = _sample_block(model, m, rng)
        done += m
    return out


def _sample_block(model, n, rng):
    scene, radio = model.scene, model.radio
    seg = scene.segment_length
    half = seg / 2.0
    alpha = radio.pathloss_alpha
    p_t = radio.tx_power
    interference = np.zeros(n)

    def add(counts, draw_positions):
        total = int(counts.sum())
        if total == 0:
            return
        r = draw_positions(total)
        gains = rng.exponential(1.0, total)
        contrib = p_t * gains * r ** (-alpha)
        idx = np.repeat(np.arange(n), counts)
        interference[:] += np.bincount(idx, weights=contrib, minlength=n)

    for offset, density in scene.interfering_lanes():
        if density == 0.0:
            continue
        counts = rng.poisson(density * seg, n)
        add(counts, lambda total, c=offset: np.hypot(
            rng.uniform(-half, half, total), c))

    for start, density in ((scene.dist_to_head, scene.ahead_density),
                           (scene.dist_to_tail, scene.behind_density)):
        if density == 0.0 or start >= half:
            continue
        counts = rng.poisson(density * (half - start), n)
        add(counts, lambda total, s=start: rng.uniform(s, half, total))

    beta = int(radio.nakagami_beta)
    desired = rng.gamma(beta, 1.0 / beta, n)
    signal = p_t * desired * radio.link_distance ** (-alpha)
    return signal / (interference + model.noise_power)


def empirical_ccdf(samples, theta_grid):
    """Fraction of samples above each grid point."""
    samples = np.asarray(samples)
    return np.array([(samples > t).mean() for t in theta_grid])


# ---------------------------------------------------------------------------
# tandem-queue discrete-event simulation


def exponential_service(rate):
    """Service sampler with exponential times of the given rate."""
    def sampler(rng, n):
        return rng.exponential(1.0 / rate, n)
    return sampler


def deterministic_service(duration):
    """Service sampler with a constant service time."""
    def sampler(rng, n):
        return np.full(n, duration)
    return sampler


def sinr_service(model, seed_offset=0):
    """Service sampler drawing transmission times from fresh SINR
    realizations: D = S*M/(w*log2(1+sinr))."""
    scale = model.bits_per_use()

    def sampler(rng, n):
        seed = int(rng.integers(0, 2**63 - 1)) + seed_offset
        gamma = sample_sinr(model, n, seed)
        return scale / np.log2(1.0 + gamma)
    return sampler


@dataclass(frozen=True)
class TandemResult:
    """Per-packet timings of the two-queue simulation."""

    sojourn: np.ndarray          # total time in system per packet
    q1_departures: np.ndarray
    arrivals: np.ndarray
    unstable: bool


def simulate_tandem_queue(queue, service_sampler, n_packets, seed):
    """FIFO tandem of the processor queue and the transceiver queue.

    Packets arrive Poisson at ``queue.arrival_rate``; the first stage
    serves exponentially at ``queue.processor_rate``; second-stage
    service times come from ``service_sampler``.  Unstable settings are
    simulated anyway but flagged.
    """
    rng = np.random.default_rng(seed)
    lam = queue.arrival_rate
    arrivals = np.cumsum(rng.exponential(1.0 / lam, n_packets))
    s1 = rng.exponential(1.0 / queue.processor_rate, n_packets)
    s2 = np.asarray(service_sampler(rng, n_packets), dtype=float)

    dep1 = _fifo_departures(arrivals, s1)
    dep2 = _fifo_departures(dep1, s2)
    rho2 = lam * float(s2.mean())
    unstable = queue.processor_rate <= lam or rho2 >= 1.0
    return TandemResult(sojourn=dep2 - arrivals, q1_departures=dep1,
                        arrivals=arrivals, unstable=unstable)


def _fifo_departures(arrivals, services):
    """Lindley recursion d_k = max(a_k, d_{k-1}) + s_k, vectorized as
    d_k = S_k + running_max(a_j - S_{j-1}) with S the service cumsum."""
    csum = np.cumsum(services)
    shifted = np.concatenate(([0.0], csum[:-1]))
    return csum + np.maximum.accumulate(arrivals - shifted)


def empirical_reliability(sojourn, tau, confidence=0.95):
    """Fraction of sampled delays within ``tau`` plus a normal-
    approximation binomial confidence half-width."""
    sojourn = np.asarray(sojourn)
    if sojourn.size == 0:
        raise ValueError("need at least one sample")
    p = float((sojourn <= tau).mean())
    from scipy import stats
    z = stats.norm.ppf(0.5 + confidence / 2.0)
    half = z * np.sqrt(max(p * (1.0 - p), 1e-12) / sojourn.size)
    return p, float(half)
