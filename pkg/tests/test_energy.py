import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsgd_car.energy import (DEFAULT_ENERGY, EnergyParams, Theta, analytic_feedback,
                             clamped_feedback, feedback_theta, lyapunov_rate,
                             lyapunov_rate_chain_rule, lyapunov_value, policy_action, total_energy)
from qsgd_car.env import DEFAULT_ENV, State

from derivation import halving_ratios

P = DEFAULT_ENV
states = st.builds(State, st.floats(P.z_min, P.z_goal), st.floats(P.v_min, P.v_max))
thetas = st.builds(Theta, st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))

# scalar oracle: 0.5*0.05**2 + (1/3)*2.5e-3*sin(-0.5)
E_REF = 0.00125 + 2.5e-3 / 3.0 * math.sin(-0.5)


def test_energy_examples():
    assert total_energy(State(0.0, 0.05)) == pytest.approx(0.00125, rel=1e-15)
    assert total_energy(State(0.3, 0.0)) == pytest.approx(2.5e-3 / 3 * math.sin(0.3), rel=1e-15)
    assert total_energy(State(-0.5, 0.05)) == pytest.approx(E_REF, rel=1e-14)
    assert E_REF == pytest.approx(8.50479e-4, abs=1e-9)


def test_lyapunov_examples():
    assert lyapunov_value(State(0.0, 0.0)) == 0.0
    assert lyapunov_value(State(-0.5, 0.05)) == pytest.approx(0.5 * E_REF ** 2, rel=1e-14)
    assert lyapunov_value(State(-0.5, 0.05)) == pytest.approx(3.61657e-7, rel=1e-5)


def test_feedback_examples():
    assert analytic_feedback(State(0.4, 0.0)) == 0.0
    assert analytic_feedback(State(-0.5, 0.05)) == pytest.approx(-1e-3 * 0.05 * E_REF, rel=1e-14)
    assert analytic_feedback(State(-0.5, 0.05)) == pytest.approx(-4.25239e-8, rel=1e-5)


@given(states)
def test_feedback_identity(s):
    ep = DEFAULT_ENERGY
    assert abs(analytic_feedback(s) - (-(ep.k / ep.R) * s.v * total_energy(s))) <= 1e-12
    assert lyapunov_value(s) >= 0.0


@given(states, st.floats(0.1, 10), st.floats(0.1, 10))
def test_feedback_identity_other_params(s, m, R):
    ep = EnergyParams(mass=m, R=R)
    ref = -(ep.k / ep.R) * s.v * total_energy(s, ep)
    assert analytic_feedback(s, ep) == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_clamped_feedback_range():
    big = EnergyParams(R=1e-9)
    assert clamped_feedback(State(-0.5, 0.07), big) in (-1.0, 1.0)


def test_policy_examples():
    assert policy_action((1.0, 0.0), State(0.3, 0.0)) == 0.0
    assert policy_action(Theta(1.0, 0.0), State(-0.9, 0.01)) == 1.0
    assert policy_action(Theta(0.0, 0.0), State(0.1, 0.01), tie=1.0) == 1.0


def test_policy_reproduces_feedback_sign():
    rng = np.random.default_rng(0)
    th = feedback_theta()
    for _ in range(10_000):
        s = State(rng.uniform(P.z_min, P.z_goal), rng.uniform(P.v_min, P.v_max))
        f = analytic_feedback(s)
        if f != 0.0:
            assert policy_action(th, s) == math.copysign(1.0, f)


@given(thetas, states, st.floats(1e-3, 1e3))
def test_positive_scale_invariance(th, s, c):
    assert policy_action(th.scaled(c), s) == policy_action(th, s)


@given(thetas, states)
def test_negation_antisymmetry(th, s):
    assert policy_action(th.scaled(-1.0), s) == -policy_action(th, s)
    assert policy_action(th, s) in (-1.0, 0.0, 1.0)


def test_rejects_non_finite():
    with pytest.raises(ValueError):
        policy_action((float("nan"), 0.0), State(0.0, 0.01))
    with pytest.raises(ValueError):
        total_energy(State(float("inf"), 0.0))
    with pytest.raises(ValueError):
        EnergyParams(R=0.0)


@given(states, st.floats(-1, 1))
def test_closed_form_rate_is_chain_rule_with_positive_gravity(s, u):
    # The simplified rate corresponds to dv/dt = (k/m) u + g sin(pi + 3z).
    assert lyapunov_rate(s, u) == pytest.approx(lyapunov_rate_chain_rule(s, u, gravity_sign=1.0),
                                                rel=1e-9, abs=1e-22)


@given(states, st.floats(-1, 1))
def test_closed_form_rate_vs_written_model_gap(s, u):
    ep = DEFAULT_ENERGY
    gap = lyapunov_rate(s, u) - lyapunov_rate_chain_rule(s, u, gravity_sign=-1.0)
    expected = 2 * ep.mass * ep.g * s.v * total_energy(s) * math.sin(math.pi + 3 * s.z)
    assert gap == pytest.approx(expected, rel=1e-9, abs=1e-22)


def test_finite_difference_first_order_for_consistent_model():
    for x0, errs, ratios in halving_ratios(gravity_sign=1.0):
        for r in ratios:
            assert 1.7 <= r <= 2.3, (x0, errs, ratios)
