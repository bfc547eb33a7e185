"""Uniformly sampled run logs, CSV (de)serialization and derived metrics."""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .collision import CollisionEvent, Wall, impact_force_estimate
from .dynamics import VehicleParams

COLUMNS = (
    "t", "x1", "x2", "x3", "v1", "v2", "v3",
    "qw", "qx", "qy", "qz", "w1", "w2", "w3",
    "l", "f", "tau1", "tau2", "tau3", "contact",
    "xd1", "xd2", "xd3",
)
_COL = {name: i for i, name in enumerate(COLUMNS)}

SETTLE_RADIUS = 0.05  # m


def rotation_to_quaternion(R):
    """Unit quaternion (w, x, y, z) from a rotation matrix, w >= 0."""
    R = np.asarray(R, dtype=float)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array([0.25 * s,
                      (R[2, 1] - R[1, 2]) / s,
                      (R[0, 2] - R[2, 0]) / s,
                      (R[1, 0] - R[0, 1]) / s])
    else:
        i = int(np.argmax([R[0, 0], R[1, 1], R[2, 2]]))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(1.0 + R[i, i] - R[j, j] - R[k, k]) * 2.0
        q = np.empty(4)
        q[0] = (R[k, j] - R[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (R[j, i] + R[i, j]) / s
        q[1 + k] = (R[k, i] + R[i, k]) / s
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


@dataclass
class SimLog:
    """Time-series record of a run; rows follow COLUMNS exactly."""

    data: np.ndarray
    events: list[CollisionEvent] = field(default_factory=list)
    aborted: bool = False
    diagnostic: str = ""

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2 or self.data.shape[1] != len(COLUMNS):
            raise ValueError(f"log must have {len(COLUMNS)} columns")
        if len(self.data) >= 2 and np.any(np.diff(self.data[:, 0]) <= 0):
            raise ValueError("log timestamps must be strictly increasing")

    def column(self, name):
        return self.data[:, _COL[name]]

    def vec(self, prefix):
        """Stacked (n, 3) view of e.g. x1..x3 via prefix 'x'."""
        names = {"x": ("x1", "x2", "x3"), "v": ("v1", "v2", "v3"),
                 "xd": ("xd1", "xd2", "xd3"), "tau": ("tau1", "tau2", "tau3"),
                 "w": ("w1", "w2", "w3")}[prefix]
        return self.data[:, [_COL[n] for n in names]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(COLUMNS) + "\n")
        for row in self.data:
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, path):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data=data)


@dataclass
class Metrics:
    """Scalar outcomes of a run; contact fields are None without a contact."""

    v_c: float | None = None
    v_rb: float | None = None
    contact_duration: float | None = None
    peak_l: float | None = None
    overshoot: float | None = None
    settling_time: float | None = None
    re_collision_count: int = 0
    mean_impact_force: float | None = None

    def to_dict(self):
        return {
            "v_c": self.v_c,
            "v_rb": self.v_rb,
            "contact_duration": self.contact_duration,
            "peak_l": self.peak_l,
            "overshoot": self.overshoot,
            "settling_time": self.settling_time,
            "re_collision_count": self.re_collision_count,
            "mean_impact_force": self.mean_impact_force,
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)


def _contact_episodes(flags):
    """Maximal runs of truthy contact flags as (start_idx, end_idx) inclusive."""
    on = flags > 0.5
    episodes = []
    i = 0
    n = len(on)
    while i < n:
        if on[i]:
            j = i
            while j + 1 < n and on[j + 1]:
                j += 1
            episodes.append((i, j))
            i = j + 1
        else:
            i += 1
    return episodes


def _settling_time(t, x, xd, start_idx):
    """Time from t[start_idx] until ||x - xd|| last exceeds SETTLE_RADIUS."""
    dev = np.linalg.norm(x[start_idx:] - xd[start_idx:], axis=1)
    if len(dev) == 0 or dev[-1] > SETTLE_RADIUS:
        return None
    over = np.nonzero(dev > SETTLE_RADIUS)[0]
    if len(over) == 0:
        return 0.0
    return float(t[start_idx + over[-1] + 1] - t[start_idx])


def compute_metrics(log: SimLog, cfg=None) -> Metrics:
    """Extract scalar metrics from a run log.

    cfg may be a ScenarioConfig (for wall normal and vehicle mass); without
    it the approach direction is inferred from the velocity at contact and
    the default vehicle mass is used.
    """
    if len(log.data) < 2:
        raise ValueError("malformed log: need at least two rows")
    t = log.column("t")
    x = log.vec("x")
    v = log.vec("v")
    xd = log.vec("xd")
    episodes = _contact_episodes(log.column("contact"))

    wall = getattr(cfg, "wall", None)
    mass = cfg.vehicle.m if cfg is not None else VehicleParams().m

    if not episodes:
        return Metrics(settling_time=_settling_time(t, x, xd, 0))

    i0, i1 = episodes[0]
    pre = max(i0 - 1, 0)
    post = min(i1 + 1, len(t) - 1)
    if isinstance(wall, Wall):
        n = -wall.normal
    else:
        vn = np.linalg.norm(v[pre])
        n = v[pre] / vn if vn > 0 else np.array([1.0, 0.0, 0.0])
    v_c = float(v[pre] @ n)
    v_rb = max(0.0, float(-(v[post] @ n)))
    duration = float(t[post] - t[pre])
    peak_l = float(np.max(log.column("l")))

    # overshoot past the recovery setpoint along the collision normal
    s_d = float(xd[post] @ n)
    s_min = float(np.min(x[post:] @ n))
    overshoot = max(0.0, s_d - s_min)

    return Metrics(
        v_c=v_c,
        v_rb=v_rb,
        contact_duration=duration,
        peak_l=peak_l,
        overshoot=overshoot,
        settling_time=_settling_time(t, x, xd, post),
        re_collision_count=len(episodes) - 1,
        mean_impact_force=float(impact_force_estimate(mass, v_c + v_rb, duration)),
    )
