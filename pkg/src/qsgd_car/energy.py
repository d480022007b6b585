"""Energy functions, the Lyapunov-derived feedback law and the sign-policy family."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import NamedTuple, Sequence

from .env import State


@dataclass(frozen=True)
class EnergyParams:
    mass: float = 1.0
    k: float = 1e-3
    g: float = 2.5e-3
    R: float = 1.0

    def __post_init__(self):
        for name in ("mass", "k", "g", "R"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_ENERGY = EnergyParams()


class Theta(NamedTuple):
    """Weights on ``v**3`` and ``v*sin(z)`` inside the sign feedback."""

    theta1: float
    theta2: float

    def scaled(self, c: float) -> "Theta":
        return Theta(c * self.theta1, c * self.theta2)

    def is_finite(self) -> bool:
        return math.isfinite(self.theta1) and math.isfinite(self.theta2)


def _finite(s: State) -> None:
    if not (math.isfinite(s[0]) and math.isfinite(s[1])):
        raise ValueError(f"non-finite state {s!r}")


def total_energy(s: State, ep: EnergyParams = DEFAULT_ENERGY) -> float:
    _finite(s)
    z, v = s
    return 0.5 * ep.mass * v * v + ep.mass * ep.g * math.sin(z) / 3.0


def lyapunov_value(s: State, ep: EnergyParams = DEFAULT_ENERGY) -> float:
    e = total_energy(s, ep)
    return 0.5 * e * e


def analytic_feedback(s: State, ep: EnergyParams = DEFAULT_ENERGY) -> float:
    """Unconstrained minimiser of ``R u^2 / 2 + f . grad J`` in expanded form.

    Equal to ``-(k/R) * v * total_energy(s)``.  Not clamped to [-1, 1]; see
    :func:`clamped_feedback` for a control usable in the environment.
    """
    _finite(s)
    z, v = s
    c3 = ep.k * ep.mass / (2.0 * ep.R)
    c1 = ep.k * ep.mass * ep.g / (3.0 * ep.R)
    return -c3 * v * v * v - c1 * v * math.sin(z)


def clamped_feedback(s: State, ep: EnergyParams = DEFAULT_ENERGY) -> float:
    return min(1.0, max(-1.0, analytic_feedback(s, ep)))


def feedback_theta(ep: EnergyParams = DEFAULT_ENERGY) -> Theta:
    """The sign-policy parameter whose action matches ``sign(analytic_feedback)``."""
    return Theta(-ep.k * ep.mass / (2.0 * ep.R), -ep.k * ep.mass * ep.g / (3.0 * ep.R))


def policy_argument(theta: Sequence[float], s: State) -> float:
    z, v = s
    # Evaluation order is shared with the compiled kernel; keep them in sync.
    return theta[0] * v * v * v + theta[1] * v * math.sin(z)


def sign(a: float, tie: float = 0.0) -> float:
    if a > 0.0:
        return 1.0
    if a < 0.0:
        return -1.0
    return tie


def policy_action(theta: Sequence[float], s: State, tie: float = 0.0) -> float:
    """Sign feedback ``sign(theta1 v^3 + theta2 v sin z)``.

    ``tie`` is returned when the argument is exactly zero (0 by default).
    """
    if not (math.isfinite(theta[0]) and math.isfinite(theta[1])):
        raise ValueError(f"non-finite theta {tuple(theta)!r}")
    _finite(s)
    return sign(policy_argument(theta, s), tie)


# -- continuous-time model, used only for derivation checks -----------------

def continuous_field(s: State, u: float, ep: EnergyParams = DEFAULT_ENERGY,
                     gravity_sign: float = -1.0) -> tuple[float, float]:
    """Vector field ``(x2, (k/m) u + gravity_sign * g * sin(pi + 3 x1))``.

    ``gravity_sign=-1`` is the slope model as usually written.  The closed
    form in :func:`lyapunov_rate` is exact only for ``gravity_sign=+1``.
    """
    x1, x2 = s
    return x2, ep.k / ep.mass * u + gravity_sign * ep.g * math.sin(math.pi + 3.0 * x1)


def lyapunov_rate(s: State, u: float, ep: EnergyParams = DEFAULT_ENERGY) -> float:
    """Closed-form time derivative of ``lyapunov_value`` after simplification:
    ``m g x2 E [sin(pi + 3 x1) + cos(x1)/3] + k x2 E u``."""
    x1, x2 = s
    e = total_energy(s, ep)
    return (ep.mass * ep.g * x2 * e * (math.sin(math.pi + 3.0 * x1) + math.cos(x1) / 3.0)
            + ep.k * x2 * e * u)


def lyapunov_rate_chain_rule(s: State, u: float, ep: EnergyParams = DEFAULT_ENERGY,
                             gravity_sign: float = -1.0) -> float:
    """``E * (dKE/dt + dPE/dt)`` evaluated directly on :func:`continuous_field`."""
    x1, x2 = s
    dx1, dx2 = continuous_field(s, u, ep, gravity_sign)
    e = total_energy(s, ep)
    return e * (ep.mass * x2 * dx2 + ep.mass * ep.g * math.cos(x1) * dx1 / 3.0)
