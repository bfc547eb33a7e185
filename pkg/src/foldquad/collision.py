"""Wall environment, contact detection and contact resolution.

Two contact modes: Foldable couples the wall-normal translation to the
spring-damper arm while the wall is touched; Rigid applies an impulsive
restitution bounce within a single physics step.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arm import ArmState, SpringParams, advance_arm
from .dynamics import E3, BodyState, ControlInput, VehicleParams, as_vec3, integrate_step


@dataclass
class Wall:
    """Infinite plane; `normal` points away from the wall into free space.

    The plane is {x : normal . x = offset}; signed distance of a point is
    normal . x - offset (positive in free space).
    """

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = as_vec3(self.normal, "wall normal")
        nn = np.linalg.norm(n)
        if nn == 0:
            raise ValueError("wall normal must be non-zero")
        self.normal = n / nn
        self.offset = float(self.offset)

    def distance(self, x):
        return float(self.normal @ x) - self.offset


@dataclass
class Foldable:
    spring: SpringParams = field(default_factory=SpringParams)


@dataclass
class Rigid:
    restitution: float = 0.9

    def __post_init__(self):
        if not (0.0 <= self.restitution <= 1.0):
            raise ValueError("restitution must lie in [0, 1]")


ContactMode = Foldable | Rigid


@dataclass
class CollisionEvent:
    """First-touch record; `normal` is the into-wall approach direction."""

    t_c: float
    x_c: np.ndarray
    v_c: np.ndarray
    normal: np.ndarray


def detect_contact(s: BodyState, w: Wall, p: VehicleParams, t=0.0):
    """Return a CollisionEvent if the contact sphere touches the wall while
    approaching it, else None. Separating or out-of-reach states give None."""
    d = w.distance(s.x)
    approaching = float(s.v @ w.normal) < 0.0
    if d <= p.r_contact and approaching:
        return CollisionEvent(t_c=float(t), x_c=s.x.copy(), v_c=s.v.copy(), normal=-w.normal)
    return None


def resolve_rigid(s: BodyState, ev: CollisionEvent, e: float,
                  w: Wall, p: VehicleParams) -> BodyState:
    """Impulsive restitution bounce: reflect and scale the normal velocity
    component by e, keep tangential velocity and attitude, and project the
    position back to touching contact."""
    n = ev.normal
    v_n = float(s.v @ n)
    v_new = s.v - (1.0 + e) * v_n * n
    x_new = s.x + (p.r_contact - w.distance(s.x)) * w.normal
    return BodyState(x=x_new, v=v_new, R=s.R, omega=s.omega)


def contact_constrained_step(s: BodyState, a: ArmState, w: Wall, u: ControlInput,
                             p: VehicleParams, sp: SpringParams, dt: float):
    """One physics step while the arm is pinned against the wall.

    The centroid's wall-normal coordinate is kinematically slaved to the arm
    deflection (distance to plane = r_contact - l); the arm evolves by the
    pure spring ODE from the impact rate; thrust and gravity keep acting on
    the tangential axes and attitude dynamics continue under tau. On release
    the normal velocity equals l_dot, i.e. the rebound velocity.

    Returns (BodyState, ArmState, exited).
    """
    n_in = -w.normal  # into-wall direction
    l2, ld2, _saturated, exited = advance_arm(a.l, a.l_dot, sp, dt)

    # attitude advances under full rigid-body dynamics (rotation is
    # independent of translation, so reuse the free integrator and
    # overwrite the translational part below)
    free = integrate_step(s, u, p, dt)

    a_free = p.g * E3 - (u.f / p.m) * (s.R @ E3)
    a_t = a_free - float(a_free @ n_in) * n_in
    v_t = s.v - float(s.v @ n_in) * n_in
    v_t2 = v_t + dt * a_t
    x2 = s.x + dt * (v_t + 0.5 * dt * a_t)
    # slave the normal coordinate to the arm deflection
    coord = w.offset + (p.r_contact - l2)
    x2 = x2 + (coord - float(w.normal @ x2)) * w.normal
    v2 = v_t2 + ld2 * n_in

    return BodyState(x=x2, v=v2, R=free.R, omega=free.omega), ArmState(l=l2, l_dot=ld2), exited


def impact_force_estimate(m, dv, dt_c):
    """Mean impact force F = m * dv / dt_c for a velocity change dv over dt_c."""
    if dt_c <= 0:
        raise ValueError("contact duration must be positive")
    return m * dv / dt_c
