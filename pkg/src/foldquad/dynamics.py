"""Rigid-body quadrotor model on SO(3) with a fixed-step RK4 integrator.

Frame convention: the inertial third axis points DOWN, so altitude is a
negative third coordinate and gravity acts along +e3. Positive thrust f
accelerates the vehicle along -R @ e3.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

E3 = np.array([0.0, 0.0, 1.0])

_ROT_ORTHO_TOL = 1e-6  # loose sanity bound on stored states; integrator keeps <= 1e-9


class StateBlowUpError(RuntimeError):
    """Raised when integration produces a non-finite state."""


def as_vec3(v, name="vector"):
    """Coerce to a finite (3,) float array."""
    a = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite components: {a}")
    return a


def hat(v):
    """Skew-symmetric cross-product matrix: hat(v) @ w == np.cross(v, w)."""
    x, y, z = as_vec3(v)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(M, tol=1e-9):
    """Inverse of hat. Rejects matrices that are not skew within tol."""
    M = np.asarray(M, dtype=float).reshape(3, 3)
    if np.max(np.abs(M + M.T)) > tol:
        raise ValueError("matrix is not skew-symmetric within tolerance")
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def renormalize_rotation(R):
    """Project onto the nearest rotation matrix (orthogonal polar factor).

    Uses the Newton iteration X <- (X + X^-T) / 2, which converges
    quadratically to the polar factor and is idempotent on inputs that are
    already orthonormal. Requires det(R) > 0.
    """
    X = np.asarray(R, dtype=float).reshape(3, 3).copy()
    if np.linalg.det(X) <= 0.0:
        raise ValueError("det(R) <= 0: rotation state is corrupted")
    for _ in range(20):
        if np.max(np.abs(X.T @ X - np.eye(3))) < 1e-15:
            break
        X = 0.5 * (X + np.linalg.inv(X).T)
    return X


@dataclass
class VehicleParams:
    """Mass, inertia and geometry of the vehicle."""

    m: float = 1.112
    J: np.ndarray = field(default_factory=lambda: np.diag([0.0034, 0.0034, 0.0053]))
    g: float = 9.81
    l_arm: float = 0.11      # nominal arm length (m)
    l_max: float = 0.03      # maximum inward arm travel (m)
    r_contact: float = 0.145  # contact envelope radius (m)

    def __post_init__(self):
        self.J = np.asarray(self.J, dtype=float).reshape(3, 3)
        if self.m <= 0:
            raise ValueError("mass must be positive")
        if np.max(np.abs(self.J - self.J.T)) > 1e-12 or np.any(np.linalg.eigvalsh(self.J) <= 0):
            raise ValueError("inertia must be symmetric positive-definite")
        if not (0.0 < self.l_max < self.l_arm < self.r_contact):
            raise ValueError("geometry must satisfy 0 < l_max < l_arm < r_contact")
        self.J_inv = np.linalg.inv(self.J)


@dataclass
class ControlInput:
    """Total thrust (N, along -R e3) and body moment (N m)."""

    f: float = 0.0
    tau: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.f = float(self.f)
        self.tau = as_vec3(self.tau, "tau")
        if self.f < 0:
            raise ValueError("thrust must be non-negative")


@dataclass
class BodyState:
    """Position, inertial velocity, body->inertial rotation, body rate."""

    x: np.ndarray
    v: np.ndarray
    R: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        self.x = as_vec3(self.x, "x")
        self.v = as_vec3(self.v, "v")
        self.omega = as_vec3(self.omega, "omega")
        self.R = np.asarray(self.R, dtype=float).reshape(3, 3)
        if not np.all(np.isfinite(self.R)):
            raise ValueError("R has non-finite entries")
        if np.max(np.abs(self.R.T @ self.R - np.eye(3))) > _ROT_ORTHO_TOL:
            raise ValueError("R is not orthonormal")

    @classmethod
    def hover(cls, x, yaw=0.0):
        c, s = np.cos(yaw), np.sin(yaw)
        R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return cls(x=np.asarray(x, dtype=float), v=np.zeros(3), R=R, omega=np.zeros(3))


def _deriv(x, v, R, omega, u, p):
    """Equations of motion on raw arrays (intermediate RK stages may be
    non-orthonormal or even non-finite; overflow is caught after the step)."""
    wx, wy, wz = omega
    skew = np.array([[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]])
    xdot = v
    vdot = p.g * E3 - (u.f / p.m) * (R @ E3)
    Rdot = R @ skew
    omegadot = p.J_inv @ (u.tau - np.cross(omega, p.J @ omega))
    return xdot, vdot, Rdot, omegadot


def dynamics_derivative(s: BodyState, u: ControlInput, p: VehicleParams):
    """Time derivative (xdot, vdot, Rdot, omegadot) of the body state."""
    return _deriv(s.x, s.v, s.R, s.omega, u, p)


def integrate_step(s: BodyState, u: ControlInput, p: VehicleParams, dt: float) -> BodyState:
    """One classical RK4 step followed by rotation renormalization.

    Deterministic: identical inputs give bit-identical outputs.
    """
    if not (0.0 < dt <= 0.01):
        raise ValueError("dt must be in (0, 0.01] s")
    y0 = (s.x, s.v, s.R, s.omega)
    k1 = _deriv(*y0, u, p)
    k2 = _deriv(*(a + 0.5 * dt * b for a, b in zip(y0, k1)), u, p)
    k3 = _deriv(*(a + 0.5 * dt * b for a, b in zip(y0, k2)), u, p)
    k4 = _deriv(*(a + dt * b for a, b in zip(y0, k3)), u, p)
    x, v, R, omega = (
        a + (dt / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        for a, b1, b2, b3, b4 in zip(y0, k1, k2, k3, k4)
    )
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))
            and np.all(np.isfinite(R)) and np.all(np.isfinite(omega))):
        raise StateBlowUpError("non-finite state after integration step")
    return BodyState(x=x, v=v, R=renormalize_rotation(R), omega=omega)
