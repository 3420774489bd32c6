"""Delay thresholds for plant and string stability.

The coupled spacing/velocity error dynamics of an M-follower platoon,
with the wireless delay entering through the received predecessor
state, are

    d(delta_i)/dt = z_{i-1}(t) - z_i(t)
    d(z_i)/dt     = A*delta_i(t-tau) + B*z_{i-1}(t-tau) - C*z_i(t)

with A = a*v_max/(d_sparse - d_dense), B = b, C = a + b.  Stacking the
errors gives  e' = M1 e(t) + sum_i M2_i e(t - tau_i)  over 2M states.

Plant stability (all errors converge to zero) holds, via a
Lyapunov-Razumikhin argument with domination constant k > 1, whenever
the per-link delay stays below

    tau1 = lambda_min(M3) / lambda_max(M4),

where M3 = -2(M1 + sum_i M2_i) and M4 collects the quadratic history
terms plus the Razumikhin margin 2*M*k*I.

String stability (disturbances attenuate along the platoon) holds for
delays below the closed form

    tau2 = (C^2 - 2A - B^2) / (2AC),

obtained from a first-order Pade approximation of the delay in the
adjacent-vehicle transfer function; `transfer_magnitude` exposes the
exact magnitude so tests can validate tau2 against the unapproximated
criterion |T(jf)| <= 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import GainInfeasibleError, NonRealSpectrumError


class GainPremiseWarning(UserWarning):
    """A printed feasibility premise fails while the threshold formula
    itself is still evaluable."""


@dataclass(frozen=True)
class ErrorDynamics:
    """Matrices and constants of the stacked error system.

    ``m1`` is the undelayed 2M x 2M block; ``m2`` holds one delayed
    block per follower link.  ``const_a``, ``const_b``, ``const_c`` are
    the A, B, C coefficients above; ``gain_a``/``gain_b`` keep the raw
    controller gains for the feasibility checks.
    """

    m1: np.ndarray
    m2: tuple[np.ndarray, ...]
    const_a: float
    const_b: float
    const_c: float
    gain_a: float
    gain_b: float
    follower_count: int


@dataclass(frozen=True)
class StabilityReport:
    """Both delay thresholds plus the feasibility booleans.

    ``tau_min`` is the binding budget min(tau1, tau2) when both
    thresholds exist, else None.  ``diagnostics`` records why a
    threshold is absent.
    """

    tau1: Optional[float]
    tau2: Optional[float]
    tau_min: Optional[float]
    plant_gain_condition_ok: bool
    string_gain_condition_ok: bool
    razumikhin_k: float
    diagnostics: dict


def plant_gain_condition(a, b):
    """Feasibility quantity a^2 + b^2 + 2ab - 4a; plant threshold
    requires it to be nonnegative."""
    return a * a + b * b + 2.0 * a * b - 4.0 * a


def string_gain_condition(a, b):
    """Feasibility quantity a + 2b - 2 for the string threshold."""
    return a + 2.0 * b - 2.0


def build_dynamics(spec):
    """Assemble the error-dynamics matrices for a platoon spec."""
    m = spec.follower_count
    a, b = spec.gain_a, spec.gain_b
    const_a = a * spec.v_max / (spec.d_sparse - spec.d_dense)
    const_b = b
    const_c = a + b

    omega1 = -np.eye(m)
    omega1 += np.diag(np.ones(m - 1), k=-1)
    omega2 = -const_c * np.eye(m)
    m1 = np.zeros((2 * m, 2 * m))
    m1[:m, m:] = omega1
    m1[m:, m:] = omega2

    m2 = []
    for i in range(1, m + 1):
        block = np.zeros((2 * m, 2 * m))
        block[m + i - 1, i - 1] = const_a
        if i > 1:
            block[m + i - 1, m + i - 2] = const_b
        m2.append(block)

    return ErrorDynamics(m1=m1, m2=tuple(m2), const_a=const_a,
                         const_b=const_b, const_c=const_c,
                         gain_a=a, gain_b=b, follower_count=m)


def _m3(dyn):
    return -2.0 * (dyn.m1 + sum(dyn.m2))


def _m4(dyn, k):
    m = dyn.follower_count
    m1 = dyn.m1
    total = np.zeros_like(m1)
    for blk in dyn.m2:
        core = blk @ m1
        total += core @ core.T
    for i in range(1, m):
        core = dyn.m2[i] @ dyn.m2[i - 1]
        total += core @ core.T
    total += 2.0 * m * k * np.eye(2 * m)
    return total


def plant_threshold(dyn, k=1.01):
    """Delay threshold tau1 guaranteeing plant stability.

    Raises GainInfeasibleError when the gain feasibility condition
    fails, and NonRealSpectrumError when the spectrum of M3 carries an
    imaginary part that cannot be attributed to roundoff.

    The eigenvalues of M3 are analytically real (M-fold repeated) under
    the feasibility condition, but the repetition makes them defective:
    a dense eigensolver perturbs them by roughly (eps*||M3||)^(1/M),
    which dwarfs any fixed 1e-9 cutoff already at M >= 3.  The
    imaginary-part tolerance below uses that perturbation scale, so
    genuinely complex pairs still raise while roundoff scatter is
    truncated.
    """
    if k <= 1.0:
        raise ValueError("razumikhin constant k must exceed 1")
    cond = plant_gain_condition(dyn.gain_a, dyn.gain_b)
    if cond < 0.0:
        raise GainInfeasibleError(
            f"plant gain condition a^2+b^2+2ab-4a >= 0 fails "
            f"(a={dyn.gain_a}, b={dyn.gain_b}, value={cond:.6g})")

    m3 = _m3(dyn)
    eigs = np.linalg.eigvals(m3)
    norm = np.linalg.norm(m3, 2)
    m = dyn.follower_count
    fuzz = 10.0 * (np.finfo(float).eps * max(norm, 1.0)) ** (1.0 / m)
    tol = max(1e-9 * norm, fuzz)
    worst = float(np.abs(eigs.imag).max())
    if worst > tol:
        raise NonRealSpectrumError(
            f"spectrum of M3 is not real within tolerance "
            f"(max imaginary part {worst:.3g} > {tol:.3g}); the plant "
            f"threshold is undefined for these gains")
    lam_min = float(eigs.real.min())

    m4 = _m4(dyn, k)
    lam_max = float(np.linalg.eigvalsh(m4).max())
    return lam_min / lam_max


def string_threshold(spec):
    """Delay threshold tau2 = (C^2 - 2A - B^2)/(2AC) for string
    stability.

    Raises GainInfeasibleError when the formula would be negative.  If
    only the printed premise a + 2b - 2 >= 0 fails (the two conditions
    coincide only when v_max equals the ramp width), the value is still
    returned with a GainPremiseWarning attached.
    """
    dyn_a = spec.gain_a * spec.v_max / (spec.d_sparse - spec.d_dense)
    dyn_b = spec.gain_b
    dyn_c = spec.gain_a + spec.gain_b
    numerator = dyn_c * dyn_c - 2.0 * dyn_a - dyn_b * dyn_b
    if numerator < 0.0:
        raise GainInfeasibleError(
            f"string threshold infeasible: C^2 - 2A - B^2 = "
            f"{numerator:.6g} < 0 for a={spec.gain_a}, b={spec.gain_b}")
    if string_gain_condition(spec.gain_a, spec.gain_b) < 0.0:
        warnings.warn(
            f"string gain premise a+2b-2 >= 0 fails "
            f"(a={spec.gain_a}, b={spec.gain_b}); returning the formula "
            f"value anyway", GainPremiseWarning, stacklevel=2)
    return numerator / (2.0 * dyn_a * dyn_c)


def stability_report(spec, k=1.01):
    """Evaluate both thresholds, reporting failures per field."""
    dyn = build_dynamics(spec)
    diagnostics = {}

    tau1 = None
    try:
        tau1 = plant_threshold(dyn, k=k)
    except (GainInfeasibleError, NonRealSpectrumError) as exc:
        diagnostics["tau1"] = str(exc)

    tau2 = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GainPremiseWarning)
        try:
            tau2 = string_threshold(spec)
        except GainInfeasibleError as exc:
            diagnostics["tau2"] = str(exc)

    tau_min = min(tau1, tau2) if tau1 is not None and tau2 is not None else None
    return StabilityReport(
        tau1=tau1,
        tau2=tau2,
        tau_min=tau_min,
        plant_gain_condition_ok=plant_gain_condition(spec.gain_a, spec.gain_b) >= 0.0,
        string_gain_condition_ok=string_gain_condition(spec.gain_a, spec.gain_b) >= 0.0,
        razumikhin_k=k,
        diagnostics=diagnostics,
    )


def transfer_magnitude(freq, tau, spec):
    """Exact |T(jf)| of the adjacent-vehicle velocity-error transfer
    function, with the delay kept as a true exponential.

    From the error dynamics, T(s) = (A + sB) e^(-s tau) /
    (s^2 + C s + A e^(-s tau)).  String stability is |T(jf)| <= 1 for
    every excitation frequency f > 0; this is the unapproximated
    criterion that validates `string_threshold`.  Vectorized over
    ``freq``.
    """
    dyn_a = spec.gain_a * spec.v_max / (spec.d_sparse - spec.d_dense)
    dyn_b = spec.gain_b
    dyn_c = spec.gain_a + spec.gain_b
    s = 1j * np.asarray(freq, dtype=float)
    lag = np.exp(-s * tau)
    t = (dyn_a + s * dyn_b) * lag / (s * s + dyn_c * s + dyn_a * lag)
    return np.abs(t)


def string_quartic(freq, tau, spec):
    """Pade-approximated string-stability margin Gamma(f).

    Gamma(f) = E f^4 + F f^2 + G with E = tau^2/4,
    F = (A/2 - B^2/4 + C^2/4) tau^2 + 1 and
    G = C^2 - 2A - B^2 - 2AC tau; |T(jf)| <= 1 under the Pade
    substitution is Gamma(f) >= 0, and G >= 0 is exactly tau <= tau2.
    Vectorized over ``freq``.
    """
    dyn_a = spec.gain_a * spec.v_max / (spec.d_sparse - spec.d_dense)
    dyn_b = spec.gain_b
    dyn_c = spec.gain_a + spec.gain_b
    f2 = np.asarray(freq, dtype=float) ** 2
    coef_e = 0.25 * tau * tau
    coef_f = (0.5 * dyn_a - 0.25 * dyn_b ** 2 + 0.25 * dyn_c ** 2) * tau * tau + 1.0
    coef_g = dyn_c ** 2 - 2.0 * dyn_a - dyn_b ** 2 - 2.0 * dyn_a * dyn_c * tau
    return coef_e * f2 * f2 + coef_f * f2 + coef_g
