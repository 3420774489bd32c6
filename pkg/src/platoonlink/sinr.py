"""Interference statistics of a platoon V2V link.

Interfering vehicles form independent Poisson point processes: one
homogeneous process per non-platoon lane (seen at a lateral offset),
plus one-dimensional processes ahead of the platoon head and behind
its tail on the platoon lane itself.  Interferer channels fade
exponentially (Rayleigh power); the desired link fades as a unit-mean
Gamma with integer shape beta.

The probability generating functional of each process gives the
Laplace transform of its aggregate interference, and the Gamma-tail
binomial expansion turns those transforms into the SINR complementary
CDF

    ccdf(theta) = sum_{k=1..beta} (-1)^(k+1) C(beta,k)
                  * exp(-k eta theta d^alpha sigma2 / P)
                  * L_lanes(k eta theta d^alpha / P)
                  * L_platoon(k eta theta d^alpha / P)

with eta = beta*(beta!)^(-1/beta).  Each link transmits on a 1/M share
of the total bandwidth w, so a packet of S bits takes
D = S*M/(w*log2(1+theta)) seconds; the first two moments of D follow
from the CCDF.

Improper integrals are mapped onto (0, 1] before adaptive quadrature:
the lateral-lane kernel via r = offset*cosh(w), w = -ln(u), which also
absorbs the inverse-square-root endpoint singularity, and the in-lane
kernel via r = start/u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .exceptions import NumericalError
from .model import HighwayScene, RadioSpec

_QUAD_EPSREL = 1e-8
_TRUNC_TOL = 1e-9


@dataclass(frozen=True)
class SinrModel:
    """Binds a highway scene and radio spec to a platoon size.

    The platoon's subcarrier allocation splits the total bandwidth
    evenly, so each link sees bandwidth ``total/M`` and noise power
    ``noise_psd * total/M``.
    """

    scene: HighwayScene
    radio: RadioSpec
    follower_count: int

    def __post_init__(self):
        if self.follower_count < 1:
            raise ValueError("follower_count must be >= 1")

    @property
    def subcarrier_bandwidth(self):
        return self.radio.total_bandwidth / self.follower_count

    @property
    def noise_power(self):
        return self.radio.noise_psd * self.subcarrier_bandwidth

    @property
    def nakagami_eta(self):
        beta = int(self.radio.nakagami_beta)
        return beta * math.factorial(beta) ** (-1.0 / beta)

    def bits_per_use(self):
        """S*M/w, the service-time scale in seconds per unit of
        log2(1 + SINR)."""
        return (self.radio.packet_size * self.follower_count
                / self.radio.total_bandwidth)


def _quad(fn, lo, hi, points=None):
    val, err = integrate.quad(fn, lo, hi, epsabs=1e-14,
                              epsrel=_QUAD_EPSREL, limit=200, points=points)
    if err > max(1e-10, 1e-5 * abs(val)):
        raise NumericalError(
            f"quadrature failed to converge (value {val:.6g}, "
            f"error estimate {err:.3g})")
    return val


def _transition_hint(s, tx_power, alpha, scale):
    """Where s P r^-alpha crosses one, mapped into the unit interval;
    focuses the adaptive rule when the kernel turns into a step."""
    r_star = (s * tx_power) ** (1.0 / alpha)
    u_c = scale / r_star
    return [u_c] if 1e-12 < u_c < 1.0 else None


def _lane_exponent(s, offset, tx_power, alpha):
    """Integral of (1 - 1/(1 + s P r^-alpha)) * 2r/sqrt(r^2 - c^2)
    over r in (c, inf), c = lateral offset."""
    def integrand(u):
        r = offset * (u + 1.0 / u) / 2.0
        x = s * tx_power * r ** (-alpha)
        return offset * (u + 1.0 / u) * (x / (1.0 + x)) / u

    return _quad(integrand, 0.0, 1.0,
                 points=_transition_hint(s, tx_power, alpha, offset))


def _line_exponent(s, start, tx_power, alpha):
    """Integral of (1 - 1/(1 + s P r^-alpha)) over r in (start, inf)."""
    def integrand(u):
        r = start / u
        x = s * tx_power * r ** (-alpha)
        return (x / (1.0 + x)) * start / (u * u)

    return _quad(integrand, 0.0, 1.0,
                 points=_transition_hint(s, tx_power, alpha, start))


def laplace_nonplatoon(s, model):
    """Laplace transform of the aggregate interference from all
    non-platoon lanes, evaluated at s >= 0."""
    if s < 0.0:
        raise ValueError("s must be nonnegative")
    if s == 0.0:
        return 1.0
    radio = model.radio
    total = 0.0
    for offset, density in model.scene.interfering_lanes():
        if density == 0.0:
            continue
        total += density * _lane_exponent(s, offset, radio.tx_power,
                                          radio.pathloss_alpha)
    return math.exp(-total)


def laplace_platoon(s, model):
    """Laplace transform of the interference from non-platoon vehicles
    sharing the platoon lane (ahead of the head, behind the tail)."""
    if s < 0.0:
        raise ValueError("s must be nonnegative")
    if s == 0.0:
        return 1.0
    scene, radio = model.scene, model.radio
    total = 0.0
    if scene.ahead_density > 0.0:
        total += scene.ahead_density * _line_exponent(
            s, scene.dist_to_head, radio.tx_power, radio.pathloss_alpha)
    if scene.behind_density > 0.0:
        total += scene.behind_density * _line_exponent(
            s, scene.dist_to_tail, radio.tx_power, radio.pathloss_alpha)
    return math.exp(-total)


def sinr_ccdf(theta, model):
    """P(SINR > theta) for the tagged platoon link."""
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    radio = model.radio
    beta = int(radio.nakagami_beta)
    eta = model.nakagami_eta
    scale = eta * theta * radio.link_distance ** radio.pathloss_alpha / radio.tx_power
    sigma2 = model.noise_power
    if scale * sigma2 >= 700.0:
        # the k=1 noise factor alone is below double-precision range,
        # and every other factor only shrinks the terms further
        return 0.0
    total = 0.0
    for k in range(1, beta + 1):
        s = k * scale
        term = (math.comb(beta, k) * math.exp(-s * sigma2)
                * laplace_nonplatoon(s, model) * laplace_platoon(s, model))
        total += term if k % 2 == 1 else -term
    return min(max(total, 0.0), 1.0)


def sinr_pdf(theta, model):
    """SINR density -d ccdf/d theta via central differences.

    The step follows h = max(1e-6, 1e-4*theta), shrunk near zero so the
    lower stencil point stays positive.  A value below -1e-8 signals a
    differentiation failure and raises; small negative roundoff is
    clipped to zero.
    """
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    h = max(1e-6, 1e-4 * theta)
    if h >= theta:
        h = 0.5 * theta
    val = (sinr_ccdf(theta - h, model) - sinr_ccdf(theta + h, model)) / (2.0 * h)
    if val < -1e-8:
        raise NumericalError(
            f"sinr_pdf produced {val:.3g} < -1e-8 at theta={theta:.6g}")
    return max(val, 0.0)


@dataclass(frozen=True)
class ServiceMoments:
    """First two moments of the per-packet transmission time.

    ``truncated_mass`` is the SINR probability mass outside the
    quadrature window, an explicit bound on what the moments ignore.
    """

    mean: float
    variance: float
    truncated_mass: float

    def __post_init__(self):
        if self.mean <= 0.0:
            raise ValueError("mean service time must be positive")
        if self.variance < 0.0:
            raise ValueError("variance must be nonnegative")

    @property
    def service_rate(self):
        return 1.0 / self.mean

    def utilization(self, arrival_rate):
        return arrival_rate * self.mean


def _bracket_quantile(ccdf, target, x0, step):
    """Walk log10-theta in direction ``step`` until ccdf crosses
    ``target``, then bisect.  Returns theta at the crossing."""
    lo = x0
    val_lo = ccdf(10.0 ** lo)
    hi = lo
    val_hi = val_lo
    for _ in range(40):
        hi += step
        val_hi = ccdf(10.0 ** hi)
        if (val_lo - target) * (val_hi - target) <= 0.0:
            break
        lo, val_lo = hi, val_hi
    else:
        raise NumericalError("failed to bracket a CCDF quantile")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if (ccdf(10.0 ** mid) - target) * (val_lo - target) > 0.0:
            lo = mid
        else:
            hi = mid
    return 10.0 ** (0.5 * (lo + hi))


def truncation_window(model, tol=_TRUNC_TOL):
    """Theta interval outside which the CCDF is within ``tol`` of its
    limits; the service-moment integrals run over this window."""
    ccdf = lambda t: sinr_ccdf(t, model)
    theta_min = _bracket_quantile(ccdf, 1.0 - tol, 0.0, -1.0)
    theta_max = _bracket_quantile(ccdf, tol, 0.0, +1.0)
    return theta_min, theta_max


def service_moments(model):
    """Mean and variance of the packet service time D.

    Both moments integrate g(theta)^p against the SINR density over the
    truncated window, with g(theta) = S*M/(w*log2(1+theta)) and the
    density taken from `sinr_pdf`.
    """
    theta_min, theta_max = truncation_window(model)
    scale = model.bits_per_use()

    def weight(x):
        theta = math.exp(x)
        return sinr_pdf(theta, model) * theta

    def inv_log(x):
        return 1.0 / math.log2(1.0 + math.exp(x))

    lo, hi = math.log(theta_min), math.log(theta_max)
    ex = _moment_quad(lambda x: inv_log(x) * weight(x), lo, hi)
    ex2 = _moment_quad(lambda x: inv_log(x) ** 2 * weight(x), lo, hi)

    mean = scale * ex
    var = scale * scale * (ex2 - ex * ex)
    if var < 0.0:
        if var < -1e-9 * scale * scale * ex2:
            raise NumericalError(f"negative service-time variance {var:.3g}")
        var = 0.0
    truncated = (1.0 - sinr_ccdf(theta_min, model)) + sinr_ccdf(theta_max, model)
    return ServiceMoments(mean=mean, variance=var, truncated_mass=truncated)


def _moment_quad(fn, lo, hi):
    val, err = integrate.quad(fn, lo, hi, epsabs=1e-12, epsrel=1e-6,
                              limit=400)
    if err > max(1e-9, 1e-3 * abs(val)):
        raise NumericalError(
            f"service-moment quadrature failed (value {val:.6g}, "
            f"error estimate {err:.3g})")
    return val


@dataclass(frozen=True)
class CcdfTable:
    """Tabulated CCDF on an ascending SINR grid (linear scale)."""

    theta_grid: tuple[float, ...]
    ccdf_values: tuple[float, ...]

    def __post_init__(self):
        grid = np.asarray(self.theta_grid)
        vals = np.asarray(self.ccdf_values)
        if grid.ndim != 1 or grid.size != vals.size:
            raise ValueError("grid and values must be 1-d and aligned")
        if np.any(np.diff(grid) <= 0.0):
            raise ValueError("theta grid must be strictly ascending")
        if np.any(vals < 0.0) or np.any(vals > 1.0):
            raise ValueError("ccdf values must lie in [0, 1]")
        if np.any(np.diff(vals) > 1e-12):
            raise ValueError("ccdf values must be nonincreasing")


def ccdf_table(model, theta_grid):
    """Evaluate the analytic CCDF on a grid of theta values."""
    grid = tuple(float(t) for t in theta_grid)
    vals = tuple(sinr_ccdf(t, model) for t in grid)
    return CcdfTable(theta_grid=grid, ccdf_values=vals)
