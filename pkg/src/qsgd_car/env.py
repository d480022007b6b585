"""Discrete-time Mountain Car dynamics.

The position update uses the velocity from *before* the step, and both state
components are clamped independently to the box afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import NamedTuple


@dataclass(frozen=True)
class EnvParams:
    z_min: float = -1.2
    z_goal: float = 0.5
    v_min: float = -0.07
    v_max: float = 0.07
    force_gain: float = 1e-3
    gravity_gain: float = 2.5e-3
    slope_wavenumber: float = 3.0

    def __post_init__(self):
        if not self.z_min < self.z_goal:
            raise ValueError(f"z_min ({self.z_min}) must be below z_goal ({self.z_goal})")
        if not self.v_min < 0.0 < self.v_max:
            raise ValueError(f"need v_min < 0 < v_max, got [{self.v_min}, {self.v_max}]")
        if not (self.force_gain > 0 and self.gravity_gain > 0):
            raise ValueError("force_gain and gravity_gain must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EnvParams":
        return cls(**{k: float(v) for k, v in d.items()})

    def contains(self, z: float, v: float) -> bool:
        return self.z_min <= z <= self.z_goal and self.v_min <= v <= self.v_max


DEFAULT_ENV = EnvParams()


class State(NamedTuple):
    z: float
    v: float


class StepOutcome(NamedTuple):
    next: State
    reached_goal: bool
    wall_reset: bool


def check_state(s: State, p: EnvParams = DEFAULT_ENV) -> None:
    z, v = s
    if not (math.isfinite(z) and math.isfinite(v)):
        raise ValueError(f"non-finite state {s!r}")
    if not p.contains(z, v):
        raise ValueError(f"state {s!r} outside box [{p.z_min}, {p.z_goal}] x [{p.v_min}, {p.v_max}]")


def step(s: State, u: float, p: EnvParams = DEFAULT_ENV) -> StepOutcome:
    """Advance one time step under control ``u`` in [-1, 1]."""
    z, v = s
    if not (math.isfinite(z) and math.isfinite(v)):
        raise ValueError(f"non-finite state {s!r}")
    if not -1.0 <= u <= 1.0:
        raise ValueError(f"control {u!r} outside [-1, 1]")

    z_next = z + v
    v_next = v + p.force_gain * u - p.gravity_gain * math.cos(p.slope_wavenumber * z)
    reached = z_next >= p.z_goal

    z_next = min(max(z_next, p.z_min), p.z_goal)
    v_next = min(max(v_next, p.v_min), p.v_max)
    reset = False
    if z_next == p.z_min and v_next < 0.0:
        v_next = 0.0
        reset = True
    return StepOutcome(State(z_next, v_next), reached, reset)
