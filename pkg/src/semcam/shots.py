"""Shot parameterization, canonical presets, and kinematic camera simulation.

A shot is described in spherical coordinates relative to the actor: distance
rho (m), speed toward the actor rho_dot (m/s), horizontal angle theta (deg,
0 = directly in front of the actor), horizontal rate theta_dot (deg/s), tilt
angle phi (deg above horizontal), and vertical speed v_z (m/s, positive down
per the aeronautical convention).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

PARAM_NAMES = ("rho", "rho_dot", "theta", "theta_dot", "phi", "v_z")

# Clamping ranges for generated shots: spans every preset plus twice the
# largest perceptual deltas.
RHO_RANGE = (1.0, 40.0)
PHI_RANGE = (0.0, 90.0)
RHO_DOT_MAX = 3.0
THETA_DOT_MAX = 45.0
V_Z_MAX = 3.0


class ShotType(str, Enum):
    FOLLOW = "follow"
    ORBIT = "orbit"
    DRONIE = "dronie"
    OVERHEAD = "overhead"
    FLYBY = "flyby"

    @property
    def one_hot_index(self) -> int:
        return _SHOT_TYPE_ORDER.index(self)


_SHOT_TYPE_ORDER = [
    ShotType.FOLLOW,
    ShotType.ORBIT,
    ShotType.DRONIE,
    ShotType.OVERHEAD,
    ShotType.FLYBY,
]


def shot_type_order() -> list[ShotType]:
    """Canonical one-hot ordering: follow, orbit, dronie, overhead, flyby."""
    return list(_SHOT_TYPE_ORDER)


@dataclass(frozen=True)
class ShotParameters:
    rho: float
    rho_dot: float
    theta: float
    theta_dot: float
    phi: float
    v_z: float

    def __post_init__(self):
        values = self.as_tuple()
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"non-finite shot parameters: {values}")
        if self.rho <= 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not 0.0 <= self.phi <= 90.0:
            raise ValueError(f"phi must be in [0, 90], got {self.phi}")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.rho, self.rho_dot, self.theta, self.theta_dot, self.phi, self.v_z)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(PARAM_NAMES, self.as_tuple()))

    @classmethod
    def from_dict(cls, d: dict) -> "ShotParameters":
        return cls(**{k: float(d[k]) for k in PARAM_NAMES})


def clamp_parameters(raw: dict[str, float]) -> tuple[ShotParameters, bool]:
    """Clamp a raw parameter dict into the valid shot ranges.

    Returns the clamped parameters and a flag saying whether anything moved.
    """
    clamped = {
        "rho": min(max(raw["rho"], RHO_RANGE[0]), RHO_RANGE[1]),
        "rho_dot": min(max(raw["rho_dot"], -RHO_DOT_MAX), RHO_DOT_MAX),
        "theta": raw["theta"],
        "theta_dot": min(max(raw["theta_dot"], -THETA_DOT_MAX), THETA_DOT_MAX),
        "phi": min(max(raw["phi"], PHI_RANGE[0]), PHI_RANGE[1]),
        "v_z": min(max(raw["v_z"], -V_Z_MAX), V_Z_MAX),
    }
    moved = any(abs(clamped[k] - raw[k]) > 0 for k in PARAM_NAMES)
    return ShotParameters(**clamped), moved


@dataclass(frozen=True)
class ShotPreset:
    name: str
    params: ShotParameters
    type: ShotType
    variable_mask: tuple[bool, ...]  # per PARAM_NAMES entry

    def variable_params(self) -> list[str]:
        return [n for n, m in zip(PARAM_NAMES, self.variable_mask) if m]


def _mask(*names: str) -> tuple[bool, ...]:
    return tuple(n in names for n in PARAM_NAMES)


def preset_catalog() -> list[ShotPreset]:
    """The six canonical presets with their study-variable parameter masks."""
    return [
        ShotPreset(
            "Follow 0",
            ShotParameters(rho=8, rho_dot=0, theta=0, theta_dot=0, phi=20, v_z=0),
            ShotType.FOLLOW,
            _mask("phi"),
        ),
        ShotPreset(
            "Follow 1",
            ShotParameters(rho=8, rho_dot=0, theta=135, theta_dot=0, phi=20, v_z=0),
            ShotType.FOLLOW,
            _mask("phi"),
        ),
        ShotPreset(
            "Orbit",
            ShotParameters(rho=5, rho_dot=0, theta=0, theta_dot=20, phi=20, v_z=0),
            ShotType.ORBIT,
            _mask("phi", "theta_dot"),
        ),
        ShotPreset(
            "Dronie",
            ShotParameters(rho=25, rho_dot=-0.5, theta=0, theta_dot=0, phi=45, v_z=-0.5),
            ShotType.DRONIE,
            _mask("rho_dot", "v_z"),
        ),
        ShotPreset(
            "Overhead",
            ShotParameters(rho=8, rho_dot=0, theta=180, theta_dot=0, phi=85, v_z=0),
            ShotType.OVERHEAD,
            _mask("phi", "rho_dot", "v_z"),
        ),
        ShotPreset(
            "Fly-by",
            ShotParameters(rho=15, rho_dot=0, theta=150, theta_dot=-8, phi=20, v_z=0),
            ShotType.FLYBY,
            _mask("phi", "theta_dot"),
        ),
    ]


def apply_variation(preset: ShotPreset, deltas: dict[str, float]) -> ShotParameters:
    """Offset a preset's variable parameters, clamping into valid ranges.

    Deltas on parameters outside the preset's variable mask are rejected so
    the shot stays within its original type.
    """
    allowed = set(preset.variable_params())
    for name, value in deltas.items():
        if name not in PARAM_NAMES:
            raise ValueError(f"unknown shot parameter {name!r}")
        if value != 0 and name not in allowed:
            raise ValueError(
                f"parameter {name!r} is not variable for preset {preset.name!r}"
            )
    raw = preset.params.as_dict()
    for name, value in deltas.items():
        raw[name] += value
    params, _ = clamp_parameters(raw)
    return params


@dataclass(frozen=True)
class ActorPath:
    """Time-stamped actor positions with headings (deg, world frame)."""

    times: tuple[float, ...]
    positions: tuple[tuple[float, float, float], ...]
    headings: tuple[float, ...]

    def __post_init__(self):
        if len(self.times) < 2:
            raise ValueError("actor path needs at least 2 samples")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("actor path times must be strictly increasing")
        if not (len(self.times) == len(self.positions) == len(self.headings)):
            raise ValueError("actor path field lengths differ")

    @property
    def span(self) -> float:
        return self.times[-1] - self.times[0]

    def sample(self, t: float) -> tuple[tuple[float, float, float], float]:
        """Linearly interpolated (position, heading) at time t."""
        ts = self.times
        if t <= ts[0]:
            return self.positions[0], self.headings[0]
        if t >= ts[-1]:
            return self.positions[-1], self.headings[-1]
        # binary search for the bracketing segment
        lo, hi = 0, len(ts) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ts[mid] <= t:
                lo = mid
            else:
                hi = mid
        u = (t - ts[lo]) / (ts[hi] - ts[lo])
        p0, p1 = self.positions[lo], self.positions[hi]
        pos = tuple(a + u * (b - a) for a, b in zip(p0, p1))
        h0, h1 = self.headings[lo], self.headings[hi]
        # interpolate heading through the shortest arc
        dh = (h1 - h0 + 180.0) % 360.0 - 180.0
        return pos, h0 + u * dh

    @staticmethod
    def straight(duration: float, dt: float, speed: float = 2.0,
                 heading: float = 0.0) -> "ActorPath":
        """Actor moving in a straight line along its heading."""
        n = int(round(duration / dt)) + 1
        rad = math.radians(heading)
        times, positions, headings = [], [], []
        for i in range(n):
            t = i * dt
            times.append(t)
            positions.append((speed * t * math.cos(rad), speed * t * math.sin(rad), 0.0))
            headings.append(heading)
        return ActorPath(tuple(times), tuple(positions), tuple(headings))

    @staticmethod
    def static(duration: float, dt: float,
               position: tuple[float, float, float] = (0.0, 0.0, 0.0),
               heading: float = 0.0) -> "ActorPath":
        n = int(round(duration / dt)) + 1
        times = tuple(i * dt for i in range(n))
        return ActorPath(times, (position,) * n, (heading,) * n)


@dataclass(frozen=True)
class CameraPose:
    t: float
    position: tuple[float, float, float]
    pan: float
    tilt: float


@dataclass(frozen=True)
class Trajectory:
    poses: tuple[CameraPose, ...]
    actor: ActorPath
    shot: ShotParameters
    duration: float
    degenerate: bool = False  # geometry clamp (|h| > rho) hit during integration


def _look_at(cam: Sequence[float], target: Sequence[float]) -> tuple[float, float]:
    dx, dy, dz = (t - c for c, t in zip(cam, target))
    pan = math.degrees(math.atan2(dy, dx))
    tilt = math.degrees(math.atan2(dz, math.hypot(dx, dy)))
    return pan, tilt


def simulate_trajectory(shot: ShotParameters, actor: ActorPath, duration: float,
                        dt: float = 0.1) -> Trajectory:
    """Integrate the camera state and emit look-at poses.

    Explicit Euler: rho decreases at rho_dot (speed toward the actor), theta
    advances at theta_dot, height above the actor advances at -v_z (v_z is
    positive down). phi is derived from the height at each step.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if duration <= 0:
        raise ValueError("duration must be positive")
    if duration > actor.span + 1e-9:
        raise ValueError("duration exceeds actor path span")

    rho = shot.rho
    theta = shot.theta
    h = rho * math.sin(math.radians(shot.phi))
    degenerate = False

    poses = []
    n = int(math.floor(duration / dt + 1e-9))
    for i in range(n + 1):
        t = i * dt
        if rho <= 0:
            raise ValueError(f"camera reached the actor (rho <= 0) at t={t:.3f}")
        ratio = h / rho
        if ratio > 1.0 or ratio < 0.0:
            degenerate = True
            ratio = min(max(ratio, 0.0), 1.0)
        horizontal = rho * math.sqrt(max(1.0 - ratio * ratio, 0.0))
        pos, heading = actor.sample(t)
        ang = math.radians(heading + theta)
        cam = (
            pos[0] + horizontal * math.cos(ang),
            pos[1] + horizontal * math.sin(ang),
            pos[2] + h,
        )
        pan, tilt = _look_at(cam, pos)
        poses.append(CameraPose(t=t, position=cam, pan=pan, tilt=tilt))
        # advance state
        rho = rho - shot.rho_dot * dt
        theta = theta + shot.theta_dot * dt
        h = h + (-shot.v_z) * dt

    return Trajectory(tuple(poses), actor, shot, duration, degenerate=degenerate)


def trajectory_records(traj: Trajectory) -> list[dict]:
    """Trajectory as plain dicts ready for line-delimited JSON export."""
    records = []
    for pose in traj.poses:
        actor_pos, _ = traj.actor.sample(pose.t)
        records.append({
            "t": pose.t,
            "cam": list(pose.position),
            "pan": pose.pan,
            "tilt": pose.tilt,
            "actor": list(actor_pos),
        })
    return records


def write_trajectory(traj: Trajectory, path) -> None:
    with open(path, "w") as fh:
        for rec in trajectory_records(traj):
            fh.write(json.dumps(rec) + "\n")


def read_actor_path(path) -> ActorPath:
    """Read an actor path from line-delimited JSON records {"t":…, "actor":[x,y,z]}."""
    times, positions, headings = [], [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            times.append(float(rec["t"]))
            positions.append(tuple(float(v) for v in rec["actor"]))
            headings.append(float(rec.get("heading", 0.0)))
    return ActorPath(tuple(times), tuple(positions), tuple(headings))
