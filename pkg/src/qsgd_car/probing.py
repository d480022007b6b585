"""Deterministic sinusoidal exploration signals and the probe clock."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

ODE_TIME = "ode_time"
ITERATION_INDEX = "iteration_index"
CLOCK_MODES = (ODE_TIME, ITERATION_INDEX)


@dataclass(frozen=True)
class SinusoidMixture:
    """``sum_i a_i sin(2 pi (w_i t + phi_i))``; phases are in cycles."""

    terms: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        terms = tuple((float(a), float(w), float(p)) for a, w, p in self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise ValueError("a sinusoid mixture needs at least one term")
        for a, w, p in terms:
            if not (math.isfinite(a) and math.isfinite(p)):
                raise ValueError(f"non-finite amplitude/phase in term {(a, w, p)}")
            if not w > 0:
                raise ValueError(f"frequency must be positive, got {w}")

    def __call__(self, t: float) -> float:
        total = 0.0
        for a, w, p in self.terms:
            total += a * math.sin(2.0 * math.pi * (w * t + p))
        return total

    def amplitude_bound(self) -> float:
        return sum(abs(a) for a, _, _ in self.terms)


@dataclass(frozen=True)
class ProbingConfig:
    dims: tuple[SinusoidMixture, ...]
    clock_mode: str = ODE_TIME

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(self.dims))
        if not self.dims:
            raise ValueError("probing signal needs at least one dimension")
        if self.clock_mode not in CLOCK_MODES:
            raise ValueError(f"clock_mode must be one of {CLOCK_MODES}, got {self.clock_mode!r}")

    @property
    def d(self) -> int:
        return len(self.dims)

    def to_dict(self) -> dict:
        return {
            "clock_mode": self.clock_mode,
            "dims": [[{"amplitude": a, "frequency": w, "phase": p} for a, w, p in m.terms]
                     for m in self.dims],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProbingConfig":
        dims = [SinusoidMixture(tuple((t["amplitude"], t["frequency"], t["phase"]) for t in m))
                for m in d["dims"]]
        return cls(tuple(dims), d.get("clock_mode", ODE_TIME))


def probe_value(pc: ProbingConfig, t: float) -> np.ndarray:
    if not (math.isfinite(t) and t >= 0):
        raise ValueError(f"probe time must be finite and non-negative, got {t!r}")
    return np.array([m(t) for m in pc.dims])


def sample_probing_config(seed, d: int = 2, ell: int = 2,
                          freqs: Sequence[float] = (0.3, 50.0),
                          phases: Sequence[float] | None = None,
                          clock_mode: str = ODE_TIME) -> ProbingConfig:
    """Draw amplitudes from unif(0, 1), independently per dimension and term.

    ``seed`` may be an int, a ``SeedSequence`` or a ``numpy.random.Generator``.
    Frequencies and phases are shared across dimensions.
    """
    if d < 1 or ell < 1:
        raise ValueError("d and ell must be >= 1")
    if len(freqs) != ell:
        raise ValueError(f"need {ell} frequencies, got {len(freqs)}")
    phases = (0.0,) * ell if phases is None else tuple(phases)
    if len(phases) != ell:
        raise ValueError(f"need {ell} phases, got {len(phases)}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    dims = []
    for _ in range(d):
        amps = rng.uniform(0.0, 1.0, size=ell)
        while np.any(amps == 0.0):  # open interval
            amps = np.where(amps == 0.0, rng.uniform(0.0, 1.0, size=ell), amps)
        dims.append(SinusoidMixture(tuple(zip(amps.tolist(), freqs, phases))))
    return ProbingConfig(tuple(dims), clock_mode)


def probe_times(pc: ProbingConfig, n_iters: int, gain: Callable[[int], float]) -> list[float]:
    """Sample times ``t_0 .. t_{N-1}`` for the discrete iteration.

    In ``ode_time`` mode ``t_0 = 0`` and ``t_{n+1} = t_n + gain(n + 1)``, the
    Euler time of the underlying parameter ODE.  ``iteration_index`` uses
    ``t_n = n``, which aliases any integer frequency to zero.
    """
    if pc.clock_mode == ITERATION_INDEX:
        return [float(n) for n in range(n_iters)]
    times = [0.0]
    for n in range(1, n_iters):
        times.append(times[-1] + gain(n))
    return times
