"""Four-region split of the state box and per-region parameter dispatch.

Regions follow phase-plane quadrant naming around ``(z_split, v_split)``::

        v
        |  2  |  1
   -----+-----+-----  v_split
        |  3  |  4
           z_split

Boundary states go to the ``>=`` side on both axes.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Sequence

from .env import DEFAULT_ENV, EnvParams, State, check_state
from .energy import Theta, policy_action

REGIONS = (1, 2, 3, 4)


@dataclass(frozen=True)
class RegionPartition:
    z_split: float = -0.35
    v_split: float = 0.0

    def validate(self, env: EnvParams = DEFAULT_ENV) -> None:
        if not env.z_min < self.z_split < env.z_goal:
            raise ValueError(f"z_split {self.z_split} not inside ({env.z_min}, {env.z_goal})")
        if not env.v_min < self.v_split < env.v_max:
            raise ValueError(f"v_split {self.v_split} not inside ({env.v_min}, {env.v_max})")

    def to_dict(self) -> dict:
        return asdict(self)

    def bounds(self, region: int, env: EnvParams = DEFAULT_ENV):
        """``((z_lo, z_hi), (v_lo, v_hi))`` of a region's sub-box."""
        check_region(region)
        right = region in (1, 4)
        up = region in (1, 2)
        zb = (self.z_split, env.z_goal) if right else (env.z_min, self.z_split)
        vb = (self.v_split, env.v_max) if up else (env.v_min, self.v_split)
        return zb, vb


DEFAULT_PARTITION = RegionPartition()


def check_region(region: int) -> None:
    if region not in REGIONS:
        raise ValueError(f"region must be one of 1..4, got {region!r}")


class PartitionedTheta(tuple):
    """Exactly four :class:`Theta` values; ``pt[r - 1]`` belongs to region ``r``."""

    def __new__(cls, thetas: Sequence[Sequence[float]]):
        items = tuple(Theta(float(t[0]), float(t[1])) for t in thetas)
        if len(items) != 4:
            raise ValueError(f"expected 4 region parameters, got {len(items)}")
        if not all(t.is_finite() for t in items):
            raise ValueError("partitioned theta contains non-finite entries")
        return super().__new__(cls, items)

    @classmethod
    def uniform(cls, theta: Sequence[float]) -> "PartitionedTheta":
        return cls([theta] * 4)

    def for_region(self, region: int) -> Theta:
        check_region(region)
        return self[region - 1]

    def replace(self, region: int, theta: Sequence[float]) -> "PartitionedTheta":
        check_region(region)
        items = list(self)
        items[region - 1] = theta
        return PartitionedTheta(items)

    def as_rows(self) -> list[list[float]]:
        return [[t.theta1, t.theta2] for t in self]


def region_of_zv(z: float, v: float, p: RegionPartition = DEFAULT_PARTITION) -> int:
    if z >= p.z_split:
        return 1 if v >= p.v_split else 4
    return 2 if v >= p.v_split else 3


def region_of(s: State, p: RegionPartition = DEFAULT_PARTITION,
              env: EnvParams = DEFAULT_ENV) -> int:
    check_state(s, env)
    return region_of_zv(s[0], s[1], p)


def partitioned_action(pt: PartitionedTheta, s: State, p: RegionPartition = DEFAULT_PARTITION,
                       env: EnvParams = DEFAULT_ENV, tie: float = 0.0) -> float:
    return policy_action(pt[region_of(s, p, env) - 1], s, tie)
