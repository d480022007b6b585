"""Policy rollouts and the minimum-time cost signals.

``gamma`` and friends accept a :class:`~qsgd_car.energy.Theta`, a
:class:`~qsgd_car.partition.PartitionedTheta` or a plain length-2 array and
route through the rollout kernel.  :func:`rollout` is the slow, general path
for arbitrary state -> control callables and for trajectory recording.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .energy import policy_action
from .env import DEFAULT_ENV, EnvParams, State, check_state, step
from .partition import DEFAULT_PARTITION, PartitionedTheta, RegionPartition, region_of_zv

Policy = Callable[[State], float]


@dataclass(frozen=True)
class CostConfig:
    t_max: int = 500
    step_cost: float = 1.0

    def __post_init__(self):
        if int(self.t_max) != self.t_max or self.t_max < 1:
            raise ValueError(f"t_max must be a positive integer, got {self.t_max!r}")
        if not self.step_cost > 0:
            raise ValueError("step_cost must be positive")

    @property
    def cap(self) -> float:
        return self.t_max * self.step_cost

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_COST = CostConfig()


@dataclass
class EpisodeResult:
    steps: int
    reached_goal: bool
    trajectory: Optional[list[State]] = None
    controls: Optional[list[float]] = None


def make_policy(param, partition: RegionPartition = DEFAULT_PARTITION, tie: float = 0.0) -> Policy:
    """Wrap a theta (or partitioned theta) as a state -> control callable."""
    rows, partitioned = theta_rows(param)
    if not partitioned:
        th = tuple(rows[0])
        return lambda s: policy_action(th, s, tie)
    ths = [tuple(r) for r in rows]
    return lambda s: policy_action(ths[region_of_zv(s[0], s[1], partition) - 1], s, tie)


def rollout(policy: Policy, x0: State, cc: CostConfig = DEFAULT_COST,
            record: bool = False, env: EnvParams = DEFAULT_ENV) -> EpisodeResult:
    x0 = State(*x0)
    check_state(x0, env)
    traj = [x0] if record else None
    ctrl = [] if record else None
    if x0.z >= env.z_goal:
        return EpisodeResult(0, True, traj, ctrl)
    s = x0
    for n in range(cc.t_max):
        u = policy(s)
        out = step(s, u, env)
        s = out.next
        if record:
            traj.append(s)
            ctrl.append(u)
        if out.reached_goal:
            return EpisodeResult(n + 1, True, traj, ctrl)
    return EpisodeResult(cc.t_max, False, traj, ctrl)


def theta_rows(param) -> tuple[np.ndarray, bool]:
    """Normalise a policy parameter to ``(rows, partitioned)`` for the kernel."""
    if isinstance(param, PartitionedTheta):
        return np.array(param.as_rows(), dtype=np.float64), True
    arr = np.asarray(param, dtype=np.float64)
    if arr.shape == (2,):
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"non-finite theta {arr.tolist()}")
        return arr.reshape(1, 2), False
    if arr.shape == (4, 2):
        return np.array(PartitionedTheta(arr).as_rows()), True
    raise TypeError(f"cannot interpret {param!r} as a policy parameter")


def as_ic_array(ics, env: EnvParams = DEFAULT_ENV) -> np.ndarray:
    """(K, 2) float array of validated initial states."""
    arr = np.asarray(ics, dtype=np.float64)
    if arr.ndim == 1 and arr.shape[0] == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"initial conditions must have shape (K, 2), got {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError("empty initial-condition set")
    z, v = arr[:, 0], arr[:, 1]
    ok = (np.isfinite(z) & np.isfinite(v) & (z >= env.z_min) & (z <= env.z_goal)
          & (v >= env.v_min) & (v <= env.v_max))
    if not ok.all():
        bad = int(np.flatnonzero(~ok)[0])
        raise ValueError(f"initial condition {bad} {tuple(arr[bad])} is outside the state box")
    return arr


def episode_lengths(param, ics, cc: CostConfig = DEFAULT_COST, env: EnvParams = DEFAULT_ENV,
                    partition: RegionPartition = DEFAULT_PARTITION, tie: float = 0.0,
                    backend: Optional[str] = None) -> np.ndarray:
    """Steps-to-goal (capped at ``t_max``) for each initial condition."""
    rows, partitioned = theta_rows(param)
    arr = as_ic_array(ics, env)
    fn = kernels.episode_lengths if backend is None else kernels.BACKENDS[backend]
    return fn(rows, partition.z_split, partition.v_split, partitioned,
              arr[:, 0], arr[:, 1],
              env.z_min, env.z_goal, env.v_min, env.v_max,
              env.force_gain, env.gravity_gain, env.slope_wavenumber,
              int(cc.t_max), float(tie))


def cost_to_go(policy, x0: State, cc: CostConfig = DEFAULT_COST, env: EnvParams = DEFAULT_ENV,
               partition: RegionPartition = DEFAULT_PARTITION, tie: float = 0.0) -> float:
    if callable(policy):
        return cc.step_cost * rollout(policy, x0, cc, env=env).steps
    steps = episode_lengths(policy, [tuple(x0)], cc, env, partition, tie)
    return cc.step_cost * int(steps[0])


def mean_cost(steps: Sequence[int], cc: CostConfig = DEFAULT_COST) -> float:
    if len(steps) == 0:
        raise ValueError("empty initial-condition set")
    return math.fsum(cc.step_cost * int(n) for n in steps) / len(steps)


def gamma_bullet(param, ics, cc: CostConfig = DEFAULT_COST, env: EnvParams = DEFAULT_ENV,
                 partition: RegionPartition = DEFAULT_PARTITION, tie: float = 0.0) -> float:
    """Mean cost-to-go over the initial conditions."""
    return mean_cost(episode_lengths(param, ics, cc, env, partition, tie), cc)


def gamma(param, ics, cc: CostConfig = DEFAULT_COST, env: EnvParams = DEFAULT_ENV,
          partition: RegionPartition = DEFAULT_PARTITION, tie: float = 0.0) -> float:
    """``min(gamma_bullet, t_max * step_cost)``, the training objective."""
    return min(gamma_bullet(param, ics, cc, env, partition, tie), cc.cap)


def gamma_partitioned_avg(pt: PartitionedTheta, per_region_ics: Sequence, cc: CostConfig = DEFAULT_COST,
                          env: EnvParams = DEFAULT_ENV, partition: RegionPartition = DEFAULT_PARTITION,
                          tie: float = 0.0) -> tuple[list[float], float]:
    """Per-region cost of the assembled policy and their average.

    Each region's value rolls out the full partitioned policy from that
    region's initial conditions.
    """
    if len(per_region_ics) != 4:
        raise ValueError(f"expected 4 per-region IC sets, got {len(per_region_ics)}")
    pt = pt if isinstance(pt, PartitionedTheta) else PartitionedTheta(pt)
    values = []
    for r, ics in enumerate(per_region_ics, start=1):
        arr = as_ic_array(ics, env)
        for i, (z, v) in enumerate(arr):
            if region_of_zv(z, v, partition) != r:
                raise ValueError(f"initial condition {i} {(z, v)} of region {r} lies in "
                                 f"region {region_of_zv(z, v, partition)}")
        values.append(gamma(pt, arr, cc, env, partition, tie))
    return values, math.fsum(values) / 4.0
