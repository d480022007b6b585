"""Training runs, restart studies and generalization tests.

Every random quantity is drawn from a ``SeedSequence`` keyed by
``(master_seed, purpose, index)``, so any experiment is a pure function of
its :class:`ExperimentConfig` and restarts can run in any order or process.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .energy import Theta
from .env import DEFAULT_ENV, EnvParams, State
from .objective import (CostConfig, EpisodeResult, as_ic_array, gamma, gamma_partitioned_avg,
                        make_policy, rollout)
from .partition import (DEFAULT_PARTITION, REGIONS, PartitionedTheta, RegionPartition,
                        check_region, region_of_zv)
from .probing import ODE_TIME, ProbingConfig, sample_probing_config
from .qsgd import QsgdConfig, QsgdError, QsgdTrace, run_qsgd

logger = logging.getLogger(__name__)

UNIFORM = "uniform"
PARTITIONED = "partitioned"
MODES = (UNIFORM, PARTITIONED)

# seed-derivation purposes
_TRAIN_ICS = 0
_TEST_ICS = 1
_RESTART = 2


@dataclass(frozen=True)
class ProbingDefaults:
    ell: int = 2
    freqs: tuple[float, ...] = (0.3, 50.0)
    phases: tuple[float, ...] = (0.0, 0.0)
    clock_mode: str = ODE_TIME

    def to_dict(self) -> dict:
        return {"ell": self.ell, "freqs": list(self.freqs), "phases": list(self.phases),
                "clock_mode": self.clock_mode}

    @classmethod
    def from_dict(cls, d: dict) -> "ProbingDefaults":
        return cls(int(d.get("ell", 2)), tuple(map(float, d.get("freqs", (0.3, 50.0)))),
                   tuple(map(float, d.get("phases", (0.0, 0.0)))), d.get("clock_mode", ODE_TIME))


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = UNIFORM
    master_seed: int = 0
    n_train_ics: int = 80
    n_test_ics: int = 50
    n_restarts: int = 800  # size of the shared theta0 pool; split 4 ways in partitioned mode
    qsgd: QsgdConfig = QsgdConfig()
    cost: CostConfig = CostConfig()
    env: EnvParams = DEFAULT_ENV
    partition: RegionPartition = DEFAULT_PARTITION
    probing: ProbingDefaults = ProbingDefaults()
    theta0_low: float = -1.0
    theta0_high: float = 1.0
    tie: float = 0.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("n_train_ics", "n_test_ics", "n_restarts"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.mode == PARTITIONED:
            if self.n_train_ics % 4:
                raise ValueError("partitioned mode needs n_train_ics divisible by 4")
            if self.n_restarts % 4:
                raise ValueError("partitioned mode needs n_restarts divisible by 4")
        if not self.theta0_low < self.theta0_high:
            raise ValueError("theta0_low must be below theta0_high")
        if self.tie not in (-1.0, 0.0, 1.0):
            raise ValueError("tie must be -1, 0 or 1")
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")
        self.partition.validate(self.env)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode, "master_seed": self.master_seed,
            "n_train_ics": self.n_train_ics, "n_test_ics": self.n_test_ics,
            "n_restarts": self.n_restarts,
            "qsgd": self.qsgd.to_dict(), "cost": self.cost.to_dict(), "env": self.env.to_dict(),
            "partition": self.partition.to_dict(), "probing": self.probing.to_dict(),
            "theta0_low": self.theta0_low, "theta0_high": self.theta0_high, "tie": self.tie,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        kw = dict(d)
        if "qsgd" in kw:
            kw["qsgd"] = QsgdConfig.from_dict(kw["qsgd"])
        if "cost" in kw:
            kw["cost"] = CostConfig(int(kw["cost"].get("t_max", 500)),
                                    float(kw["cost"].get("step_cost", 1.0)))
        if "env" in kw:
            kw["env"] = EnvParams.from_dict({**DEFAULT_ENV.to_dict(), **kw["env"]})
        if "partition" in kw:
            kw["partition"] = RegionPartition(**{**DEFAULT_PARTITION.to_dict(), **kw["partition"]})
        if "probing" in kw:
            kw["probing"] = ProbingDefaults.from_dict(kw["probing"])
        return cls(**kw)

    @property
    def restarts_per_region(self) -> int:
        return self.n_restarts // 4


@dataclass
class InitialConditionSet:
    states: np.ndarray  # (K, 2)
    role: str = "train"
    regions: Optional[np.ndarray] = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.float64).reshape(-1, 2)
        if self.role not in ("train", "test"):
            raise ValueError(f"role must be 'train' or 'test', got {self.role!r}")
        if self.regions is not None:
            self.regions = np.asarray(self.regions, dtype=np.int64)
            if self.regions.shape != (len(self.states),):
                raise ValueError("one region tag per state required")

    def __len__(self):
        return len(self.states)

    def __eq__(self, other):
        if not isinstance(other, InitialConditionSet):
            return NotImplemented
        same_regions = (self.regions is None and other.regions is None) or (
            self.regions is not None and other.regions is not None
            and np.array_equal(self.regions, other.regions))
        return (self.role == other.role and np.array_equal(self.states, other.states)
                and same_regions)

    def as_states(self) -> list[State]:
        return [State(float(z), float(v)) for z, v in self.states]

    def validate(self, env: EnvParams = DEFAULT_ENV,
                 partition: RegionPartition = DEFAULT_PARTITION) -> None:
        as_ic_array(self.states, env)
        if self.regions is not None:
            for i, ((z, v), r) in enumerate(zip(self.states, self.regions)):
                if region_of_zv(z, v, partition) != r:
                    raise ValueError(f"row {i}: state {(z, v)} tagged region {r} "
                                     f"but lies in region {region_of_zv(z, v, partition)}")

    def subset(self, region: int) -> "InitialConditionSet":
        if self.regions is None:
            raise ValueError("initial-condition set carries no region tags")
        mask = self.regions == region
        return InitialConditionSet(self.states[mask], self.role, self.regions[mask])

    def concat(self, other: "InitialConditionSet") -> "InitialConditionSet":
        regions = None
        if self.regions is not None and other.regions is not None:
            regions = np.concatenate([self.regions, other.regions])
        return InitialConditionSet(np.vstack([self.states, other.states]), self.role, regions)


@dataclass
class HistogramReport:
    mode: str
    bin_edges: list[float]
    counts: list[int]
    raw_values: list[float]
    summary: dict
    failures: int = 0
    thetas: list = field(default_factory=list)  # final parameter per raw value
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "bin_edges": self.bin_edges, "counts": self.counts,
                "raw_values": self.raw_values, "summary": self.summary,
                "failures": self.failures, "thetas": self.thetas, "config": self.config}

    @classmethod
    def from_dict(cls, d: dict) -> "HistogramReport":
        required = {"mode", "bin_edges", "counts", "raw_values", "summary"}
        missing = required - set(d)
        if missing:
            raise ValueError(f"histogram report missing fields: {sorted(missing)}")
        if d["mode"] not in MODES:
            raise ValueError(f"unknown report mode {d['mode']!r}")
        edges = [float(x) for x in d["bin_edges"]]
        counts = [int(x) for x in d["counts"]]
        raw = [float(x) for x in d["raw_values"]]
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValueError("bin edges must be strictly increasing")
        if sum(counts) != len(raw) or (raw and len(edges) != len(counts) + 1):
            raise ValueError("bin counts do not match raw values")
        return cls(d["mode"], edges, counts, raw, dict(d["summary"]), int(d.get("failures", 0)),
                   list(d.get("thetas", [])), dict(d.get("config", {})))


# -- seeding -----------------------------------------------------------------

def derived_seed(master_seed: int, purpose: int, index: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(purpose, index))


def restart_draws(cfg: ExperimentConfig, pool_index: int) -> tuple[np.ndarray, ProbingConfig]:
    """``theta0`` and probing signal for restart ``pool_index`` of the shared pool."""
    rng = np.random.default_rng(derived_seed(cfg.master_seed, _RESTART, pool_index))
    theta0 = rng.uniform(cfg.theta0_low, cfg.theta0_high, size=2)
    pb = cfg.probing
    pc = sample_probing_config(rng, d=2, ell=pb.ell, freqs=pb.freqs, phases=pb.phases,
                               clock_mode=pb.clock_mode)
    return theta0, pc


# -- initial conditions --------------------------------------------------------

def generate_ics(seed, count: int, role: str = "train", region: Optional[int] = None,
                 env: EnvParams = DEFAULT_ENV,
                 partition: RegionPartition = DEFAULT_PARTITION) -> InitialConditionSet:
    """Uniform samples over the box (or one region's sub-box), never at the goal."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if region is None:
        zb, vb = (env.z_min, env.z_goal), (env.v_min, env.v_max)
    else:
        check_region(region)
        zb, vb = partition.bounds(region, env)
    states = np.empty((count, 2))
    for i in range(count):
        z = rng.uniform(*zb)
        while z >= env.z_goal:
            z = rng.uniform(*zb)
        states[i] = z, rng.uniform(*vb)
    regions = np.array([region_of_zv(z, v, partition) for z, v in states], dtype=np.int64)
    if region is not None:
        assert np.all(regions == region)
    return InitialConditionSet(states, role, regions)


def training_ics(cfg: ExperimentConfig) -> InitialConditionSet:
    """Training set: an equal share per region when the count divides by 4."""
    if cfg.n_train_ics % 4:
        return generate_ics(derived_seed(cfg.master_seed, _TRAIN_ICS, 0), cfg.n_train_ics,
                            "train", None, cfg.env, cfg.partition)
    per = cfg.n_train_ics // 4
    parts = [generate_ics(derived_seed(cfg.master_seed, _TRAIN_ICS, r), per, "train", r,
                          cfg.env, cfg.partition) for r in REGIONS]
    out = parts[0]
    for p in parts[1:]:
        out = out.concat(p)
    return out


def holdout_ics(cfg: ExperimentConfig) -> InitialConditionSet:
    return generate_ics(derived_seed(cfg.master_seed, _TEST_ICS, 0), cfg.n_test_ics, "test",
                        None, cfg.env, cfg.partition)


# -- training ------------------------------------------------------------------

def _objective(cfg: ExperimentConfig, ics: np.ndarray):
    def f(theta):
        return gamma(theta, ics, cfg.cost, cfg.env, cfg.partition, cfg.tie)
    return f


def train_on(cfg: ExperimentConfig, ics, pool_index: int = 0) -> tuple[Theta, QsgdTrace]:
    """One qSGD run of a single theta against ``gamma`` on ``ics``."""
    arr = as_ic_array(ics.states if isinstance(ics, InitialConditionSet) else ics, cfg.env)
    theta0, pc = restart_draws(cfg, pool_index)
    theta, trace = run_qsgd(_objective(cfg, arr), theta0, cfg.qsgd, pc)
    return Theta(float(theta[0]), float(theta[1])), trace


def train_uniform(cfg: ExperimentConfig, restart: int = 0,
                  ics: Optional[InitialConditionSet] = None) -> tuple[Theta, QsgdTrace]:
    ics = training_ics(cfg) if ics is None else ics
    return train_on(cfg, ics, restart)


class RegionTrainingError(RuntimeError):
    def __init__(self, region: int, cause: Exception):
        self.region = region
        super().__init__(f"region {region}: {cause}")


def train_partitioned(cfg: ExperimentConfig, restart: int = 0,
                      ics: Optional[InitialConditionSet] = None
                      ) -> tuple[PartitionedTheta, list[QsgdTrace]]:
    """Independent qSGD run per region, each on that region's ICs only.

    Region ``r`` draws its start from pool index ``(r - 1) * M/4 + restart``.
    """
    ics = training_ics(replace(cfg, mode=PARTITIONED)) if ics is None else ics
    thetas, traces = [], []
    for r in REGIONS:
        try:
            th, tr = train_on(cfg, ics.subset(r), _pool_index(cfg, r, restart))
        except QsgdError as exc:
            raise RegionTrainingError(r, exc) from exc
        thetas.append(th)
        traces.append(tr)
    return PartitionedTheta(thetas), traces


def _pool_index(cfg: ExperimentConfig, region: int, restart: int) -> int:
    return (region - 1) * max(cfg.restarts_per_region, 1) + restart


def evaluate_uniform(cfg: ExperimentConfig, theta, ics: InitialConditionSet) -> float:
    return gamma(theta, ics.states, cfg.cost, cfg.env, cfg.partition, cfg.tie)


def evaluate_partitioned(cfg: ExperimentConfig, pt: PartitionedTheta,
                         ics: InitialConditionSet) -> tuple[list[float], float]:
    return gamma_partitioned_avg(pt, [ics.subset(r).states for r in REGIONS], cfg.cost,
                                 cfg.env, cfg.partition, cfg.tie)


# -- histogram study -----------------------------------------------------------

def _restart_task(args):
    cfg, states, pool_index = args
    try:
        theta, _ = train_on(cfg, states, pool_index)
    except QsgdError as exc:
        return None, str(exc)
    return (theta.theta1, theta.theta2), None


def _map(tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [_restart_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_restart_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def histogram(values: Sequence[float]) -> tuple[list[float], list[int]]:
    """Unit-width integer-aligned bins over ``[floor(min) - 1, ceil(max) + 1]``."""
    if len(values) == 0:
        return [], []
    lo = math.floor(min(values)) - 1
    hi = math.ceil(max(values)) + 1
    edges = np.arange(lo, hi + 1, dtype=np.float64)
    counts, _ = np.histogram(np.asarray(values, dtype=np.float64), bins=edges)
    return edges.tolist(), [int(c) for c in counts]


def find_modes(edges: Sequence[float], counts: Sequence[int]) -> list[float]:
    """Left edges of local-maximum bins, most populated first."""
    padded = [0, *counts, 0]
    peaks = [i for i in range(len(counts))
             if padded[i + 1] > 0 and padded[i + 1] > padded[i] and padded[i + 1] >= padded[i + 2]]
    peaks.sort(key=lambda i: (-counts[i], i))
    return [float(edges[i]) for i in peaks]


def _summary(values: Sequence[float], edges, counts) -> dict:
    if not values:
        return {"n": 0, "mean": None, "min": None, "max": None, "modes": []}
    return {"n": len(values), "mean": math.fsum(values) / len(values),
            "min": float(min(values)), "max": float(max(values)),
            "modes": find_modes(edges, counts)}


def histogram_experiment(cfg: ExperimentConfig, jobs: int = 1) -> HistogramReport:
    """Final-cost distribution over the restart pool.

    Uniform mode trains ``M`` restarts on all training ICs and records
    ``gamma``; partitioned mode trains ``M/4`` restarts per region, assembles
    restart ``j`` of every region into one policy and records its average
    per-region cost.
    """
    ics = training_ics(cfg)
    failures = 0
    values, thetas = [], []
    if cfg.mode == UNIFORM:
        tasks = [(cfg, ics.states, i) for i in range(cfg.n_restarts)]
        for i, (theta, err) in enumerate(_map(tasks, jobs)):
            if theta is None:
                failures += 1
                logger.warning("restart %d failed: %s", i, err)
                continue
            values.append(evaluate_uniform(cfg, theta, ics))
            thetas.append(list(theta))
    else:
        per = cfg.restarts_per_region
        tasks = [(cfg, ics.subset(r).states, _pool_index(cfg, r, j))
                 for r in REGIONS for j in range(per)]
        results = _map(tasks, jobs)
        for j in range(per):
            parts = [results[(r - 1) * per + j] for r in REGIONS]
            errs = [e for _, e in parts if e is not None]
            if errs:
                failures += 1
                logger.warning("partitioned restart %d failed: %s", j, "; ".join(errs))
                continue
            pt = PartitionedTheta([th for th, _ in parts])
            values.append(evaluate_partitioned(cfg, pt, ics)[1])
            thetas.append(pt.as_rows())
    edges, counts = histogram(values)
    return HistogramReport(cfg.mode, edges, counts, values, _summary(values, edges, counts),
                           failures, thetas, cfg.to_dict())


# -- generalization ------------------------------------------------------------

def generalization_test(policy, ics, cc: CostConfig = CostConfig(), env: EnvParams = DEFAULT_ENV,
                        partition: RegionPartition = DEFAULT_PARTITION, tie: float = 0.0,
                        record: bool = True) -> tuple[list[EpisodeResult], bool]:
    """Roll out ``policy`` (a parameter or a callable) from every state in ``ics``."""
    states = ics.as_states() if isinstance(ics, InitialConditionSet) else [State(*s) for s in ics]
    fn = policy if callable(policy) else make_policy(policy, partition, tie)
    results = [rollout(fn, s, cc, record, env) for s in states]
    return results, all(r.reached_goal for r in results)
