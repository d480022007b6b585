"""qSGD #1: gradient-free descent driven by a deterministic probing signal.

Each iteration perturbs the parameter along the probe, evaluates the scalar
objective once at the perturbed point, and moves against the probe direction
in proportion to that value::

    psi_n   = theta_n + eps * xi_n
    theta_' = theta_n - a_n / eps * G @ xi_n * Gamma(psi_n),   a_n = g / (1 + n)**rho
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .probing import ProbingConfig, probe_times, probe_value

logger = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e6


class QsgdError(RuntimeError):
    def __init__(self, message: str, iteration: Optional[int] = None):
        self.iteration = iteration
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message)


class QsgdDivergence(QsgdError):
    pass


@dataclass(frozen=True)
class QsgdConfig:
    g: float = 0.08
    rho: float = 0.95
    epsilon: float = 1.0
    gain_matrix: Optional[tuple[tuple[float, ...], ...]] = None  # None means identity
    n_iters: int = 50

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError("g must be positive")
        if not 0.5 < self.rho <= 1.0:
            raise ValueError(f"rho must lie in (0.5, 1], got {self.rho}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if int(self.n_iters) != self.n_iters or self.n_iters < 1:
            raise ValueError("n_iters must be a positive integer")
        if self.gain_matrix is not None:
            G = np.asarray(self.gain_matrix, dtype=np.float64)
            object.__setattr__(self, "gain_matrix", tuple(tuple(r) for r in G.tolist()))
            if G.ndim != 2 or G.shape[0] != G.shape[1]:
                raise ValueError(f"gain matrix must be square, got shape {G.shape}")
            if not np.array_equal(G, G.T):
                raise ValueError("gain matrix must be symmetric")
            try:
                np.linalg.cholesky(G)
            except np.linalg.LinAlgError:
                raise ValueError("gain matrix must be positive definite") from None

    def gain(self, d: int) -> np.ndarray:
        if self.gain_matrix is None:
            return np.eye(d)
        G = np.array(self.gain_matrix, dtype=np.float64)
        if G.shape != (d, d):
            raise ValueError(f"gain matrix is {G.shape}, parameter dimension is {d}")
        return G

    def to_dict(self) -> dict:
        return {"g": self.g, "rho": self.rho, "epsilon": self.epsilon,
                "gain_matrix": None if self.gain_matrix is None else [list(r) for r in self.gain_matrix],
                "n_iters": self.n_iters}

    @classmethod
    def from_dict(cls, d: dict) -> "QsgdConfig":
        gm = d.get("gain_matrix")
        return cls(g=float(d.get("g", 0.08)), rho=float(d.get("rho", 0.95)),
                   epsilon=float(d.get("epsilon", 1.0)),
                   gain_matrix=None if gm is None else tuple(tuple(map(float, r)) for r in gm),
                   n_iters=int(d.get("n_iters", 50)))


@dataclass
class QsgdRecord:
    n: int
    t: float
    a: float
    theta: np.ndarray  # before the update
    xi: np.ndarray
    psi: np.ndarray
    gamma_value: float


@dataclass
class QsgdTrace:
    records: list[QsgdRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def thetas(self) -> np.ndarray:
        return np.array([r.theta for r in self.records])

    def gammas(self) -> np.ndarray:
        return np.array([r.gamma_value for r in self.records])


def step_size(n: int, cfg: QsgdConfig = QsgdConfig()) -> float:
    if n < 0:
        raise ValueError("iteration index must be non-negative")
    return cfg.g / (1.0 + n) ** cfg.rho


def qsgd_update(theta: Sequence[float], xi: Sequence[float], gamma_value: float, a: float,
                cfg: QsgdConfig = QsgdConfig(), n: Optional[int] = None) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(xi))
            and math.isfinite(gamma_value) and math.isfinite(a)):
        raise QsgdError(f"non-finite input theta={theta.tolist()} xi={xi.tolist()} "
                        f"gamma={gamma_value} a={a}", n)
    if gamma_value < 0:
        raise QsgdError(f"objective value must be non-negative, got {gamma_value}", n)
    G = cfg.gain(theta.shape[0])
    # Row-wise multiply-and-sum instead of ``G @ xi``: BLAS may fuse
    # multiply-adds, which would make the update depend on the linked library.
    gx = (G * xi).sum(axis=1)
    new = theta - a * (1.0 / cfg.epsilon) * gx * gamma_value
    if not np.all(np.isfinite(new)):
        raise QsgdError(f"update produced non-finite theta {new.tolist()}", n)
    return new


def run_qsgd(objective: Callable[[np.ndarray], float], theta0: Sequence[float],
             cfg: QsgdConfig, pc: ProbingConfig) -> tuple[np.ndarray, QsgdTrace]:
    """Run ``cfg.n_iters`` iterations from ``theta0``; returns the final parameter and trace."""
    theta = np.asarray(theta0, dtype=np.float64).copy()
    if theta.ndim != 1 or theta.shape[0] != pc.d:
        raise ValueError(f"theta0 has shape {theta.shape}, probing signal has {pc.d} dimensions")
    times = probe_times(pc, cfg.n_iters, lambda k: step_size(k, cfg))
    trace = QsgdTrace()
    for n in range(cfg.n_iters):
        a = step_size(n, cfg)
        xi = probe_value(pc, times[n])
        psi = theta + cfg.epsilon * xi
        try:
            value = float(objective(psi))
        except Exception as exc:
            raise QsgdError(f"objective failed at psi={psi.tolist()}: {exc}", n) from exc
        new = qsgd_update(theta, xi, value, a, cfg, n)
        trace.records.append(QsgdRecord(n, times[n], a, theta, xi, psi, value))
        if np.max(np.abs(new)) > DIVERGENCE_LIMIT:
            raise QsgdDivergence(f"|theta| exceeded {DIVERGENCE_LIMIT:g}: {new.tolist()}", n)
        theta = new
        logger.debug("qsgd n=%d gamma=%.3f theta=%s", n, value, theta)
    return theta, trace
