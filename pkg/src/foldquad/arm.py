"""Spring-damper folding-arm model: contact-phase ODE, closed-form response,
rebound extraction and parameter identification from displacement traces."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares


class ContactTimeoutError(RuntimeError):
    """Contact integration did not terminate within the 1 s guard."""


@dataclass
class SpringParams:
    """Mass-normalized spring-damper coefficients of the folding arm.

    b_s has units 1/s, k_s units 1/s^2; l_max is the inward travel limit and
    delta_l the hysteresis threshold at which the arm is considered released.
    """

    b_s: float = 30.0
    k_s: float = 500.0
    l_max: float = 0.03
    delta_l: float = 0.002

    def __post_init__(self):
        if self.b_s < 0:
            raise ValueError("b_s must be non-negative")
        if self.k_s <= 0:
            raise ValueError("k_s must be positive")
        if not (0.0 < self.delta_l < self.l_max):
            raise ValueError("delta_l must satisfy 0 < delta_l < l_max")

    @property
    def omega_n(self):
        return np.sqrt(self.k_s)

    @property
    def zeta(self):
        return self.b_s / (2.0 * np.sqrt(self.k_s))

    @property
    def is_underdamped(self):
        return self.b_s * self.b_s < 4.0 * self.k_s

    @property
    def omega_d(self):
        if not self.is_underdamped:
            raise ValueError("damped frequency undefined: parameters are not underdamped")
        return self.omega_n * np.sqrt(1.0 - self.zeta ** 2)


@dataclass
class ArmState:
    """Inward arm deflection (0 = rest, positive = compressed) and its rate."""

    l: float = 0.0
    l_dot: float = 0.0


@dataclass
class DisplacementTrace:
    """Sampled arm deflection (t, l); timestamps strictly increasing."""

    t: np.ndarray
    l: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float).ravel()
        self.l = np.asarray(self.l, dtype=float).ravel()
        if self.t.shape != self.l.shape:
            raise ValueError("t and l must have the same length")
        if len(self.t) >= 2 and np.any(np.diff(self.t) <= 0):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self):
        return len(self.t)

    @classmethod
    def from_csv(cls, path):
        """Load a two-column `t,l` CSV (header row optional, SI units)."""
        try:
            data = np.loadtxt(path, delimiter=",", ndmin=2)
        except ValueError:
            data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] < 2:
            raise ValueError("trace CSV must have columns t,l")
        return cls(t=data[:, 0], l=data[:, 1])


@dataclass
class ContactResult:
    """Outcome of one contact episode of the arm subsystem."""

    v_rb: float
    duration: float
    peak_l: float
    saturated: bool
    trace: DisplacementTrace


def spring_derivative(a: ArmState, p: SpringParams):
    """(l_dot, l_ddot) with l_ddot = -b_s l_dot - k_s l."""
    return a.l_dot, -p.b_s * a.l_dot - p.k_s * a.l


def analytic_response(v0, p: SpringParams, t):
    """Closed-form underdamped response from l(0) = 0, l_dot(0) = v0.

    Returns (l, l_dot) evaluated at t (scalar or array). Ignores the travel
    clamp; serves as the independent oracle for the integrated contact.
    """
    if not p.is_underdamped:
        raise ValueError("analytic response only implemented for the underdamped branch")
    t = np.asarray(t, dtype=float)
    wn, wd, zeta = p.omega_n, p.omega_d, p.zeta
    env = np.exp(-zeta * wn * t)
    l = (v0 / wd) * env * np.sin(wd * t)
    l_dot = v0 * env * (np.cos(wd * t) - (zeta * wn / wd) * np.sin(wd * t))
    return l, l_dot


def _spring_rk4_step(l, l_dot, b_s, k_s, dt):
    """Scalar RK4 step of l_ddot = -b_s l_dot - k_s l."""
    def acc(li, di):
        return -b_s * di - k_s * li

    k1l, k1d = l_dot, acc(l, l_dot)
    k2l, k2d = l_dot + 0.5 * dt * k1d, acc(l + 0.5 * dt * k1l, l_dot + 0.5 * dt * k1d)
    k3l, k3d = l_dot + 0.5 * dt * k2d, acc(l + 0.5 * dt * k2l, l_dot + 0.5 * dt * k2d)
    k4l, k4d = l_dot + dt * k3d, acc(l + dt * k3l, l_dot + dt * k3d)
    l2 = l + (dt / 6.0) * (k1l + 2.0 * k2l + 2.0 * k3l + k4l)
    d2 = l_dot + (dt / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
    return l2, d2


def advance_arm(l, l_dot, p: SpringParams, dt):
    """One integration step with travel clamp and release test.

    The clamp is an inelastic stop: hitting l_max zeroes any inward rate.
    Release (exited) is declared when l <= delta_l with the arm extending
    (l_dot < 0), which can only occur after the first compression peak.
    Returns (l, l_dot, saturated, exited).
    """
    l2, d2 = _spring_rk4_step(l, l_dot, p.b_s, p.k_s, dt)
    saturated = False
    if l2 >= p.l_max:
        l2 = p.l_max
        if d2 > 0.0:
            d2 = 0.0
        saturated = True
    exited = (l2 <= p.delta_l) and (d2 < 0.0)
    return l2, d2, saturated, exited


def simulate_contact(v_impact, p: SpringParams, dt=1e-3) -> ContactResult:
    """Integrate the arm ODE from (l=0, l_dot=v_impact) until release.

    The rebound speed is |l_dot| at the step where l first falls to delta_l
    after the compression peak. Guards against non-termination at 1 s.
    """
    if v_impact <= 0:
        raise ValueError("v_impact must be positive")
    if not (0.0 < dt <= 1e-3):
        raise ValueError("dt must be in (0, 1e-3] s")
    l, l_dot = 0.0, float(v_impact)
    t = 0.0
    ts, ls = [t], [l]
    peak_l = 0.0
    saturated_any = False
    while True:
        l, l_dot, saturated, exited = advance_arm(l, l_dot, p, dt)
        t += dt
        ts.append(t)
        ls.append(l)
        peak_l = max(peak_l, l)
        saturated_any = saturated_any or saturated
        if exited:
            return ContactResult(
                v_rb=abs(l_dot),
                duration=t,
                peak_l=peak_l,
                saturated=saturated_any,
                trace=DisplacementTrace(t=np.array(ts), l=np.array(ls)),
            )
        if t > 1.0:
            raise ContactTimeoutError(
                "contact did not release within 1 s; check spring parameters"
            )


@dataclass
class FitResult:
    """Identified spring parameters plus fit diagnostics."""

    params: SpringParams
    residual_norm: float
    converged: bool
    v0: float


def _has_oscillation(l):
    """True if the trace shows a local max followed by a local min."""
    d = np.diff(l)
    signs = np.sign(d[d != 0.0])
    saw_max = False
    for a, b in zip(signs[:-1], signs[1:]):
        if not saw_max and a > 0 and b < 0:
            saw_max = True
        elif saw_max and a < 0 and b > 0:
            return True
    return False


def fit_spring_params(trace: DisplacementTrace, guess: SpringParams) -> FitResult:
    """Least-squares identification of (b_s, k_s) from a displacement trace.

    Fits the closed-form underdamped response with the initial rate estimated
    from the first samples; the linear ODE makes the closed form exact, so no
    re-integration per iteration is needed.
    """
    if len(trace) < 10:
        raise ValueError("trace too short for identification (need >= 10 samples)")
    if not _has_oscillation(trace.l):
        raise ValueError("degenerate trace: no oscillation (local max + subsequent min)")
    t = trace.t - trace.t[0]
    k_seed = max(3, len(t) // 20)
    v0_init = float(np.polyfit(t[:k_seed], trace.l[:k_seed], 1)[0])
    if v0_init <= 0:
        # noisy leading samples; seed from the amplitude and guess frequency
        v0_init = float(np.max(np.abs(trace.l)) * guess.omega_n)

    def residuals(theta):
        b, k, v0 = theta
        if b * b >= 3.999 * k:  # keep the search on the underdamped branch
            return np.full(len(t), 1e3)
        l_model, _ = analytic_response(v0, SpringParams(b, k, guess.l_max, guess.delta_l), t)
        return l_model - trace.l

    # v0 is refined jointly with (b_s, k_s): the finite-difference seed from
    # the first samples is curvature-biased and noise-sensitive on its own.
    sol = least_squares(
        residuals,
        x0=[guess.b_s, guess.k_s, v0_init],
        bounds=([0.0, 1e-9, 1e-9], [np.inf, np.inf, np.inf]),
        max_nfev=2000,
    )
    b_fit, k_fit, v0 = sol.x
    params = SpringParams(b_s=float(b_fit), k_s=float(k_fit),
                          l_max=guess.l_max, delta_l=guess.delta_l)
    return FitResult(
        params=params,
        residual_norm=float(np.linalg.norm(sol.fun)),
        converged=bool(sol.status > 0 and np.isfinite(sol.cost)),
        v0=float(v0),
    )
