import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsgd_car.probing import probe_times, probe_value, sample_probing_config
from qsgd_car.qsgd import (QsgdConfig, QsgdDivergence, QsgdError, qsgd_update, run_qsgd,
                           step_size)

CFG = QsgdConfig()


def scalar_update(theta, xi, gam, a, eps, G):
    """Element-wise transcription of theta - a * (1/eps) * G xi * gamma."""
    d = len(theta)
    out = []
    for i in range(d):
        gx = 0.0
        for j in range(d):
            gx += G[i][j] * xi[j]
        out.append(theta[i] - a * (1.0 / eps) * gx * gam)
    return out


def test_step_size_examples():
    assert step_size(0) == 0.08
    assert step_size(1) == pytest.approx(0.08 / math.exp(0.95 * math.log(2.0)), rel=1e-15)
    assert step_size(1) == pytest.approx(0.04141060, abs=1e-8)
    for n in range(200):
        assert step_size(n + 1) < step_size(n)


def test_schedule_sums():
    a = np.array([step_size(n) for n in range(2_000_000)])
    s = np.cumsum(a)
    sq = np.cumsum(a * a)
    mid = len(a) // 2 - 1
    # doubling the horizon still grows sum a_n by percents; sum a_n^2 has settled
    assert (s[-1] - s[mid]) / s[mid] > 0.01
    assert (sq[-1] - sq[mid]) / sq[mid] < 1e-5


def test_update_examples():
    th = np.array([0.3, -0.7])
    assert np.array_equal(qsgd_update(th, [0.5, 0.5], 0.0, 0.08), th)
    out = qsgd_update([0.0, 0.0], [0.1, -0.2], 500.0, 0.08)
    assert out == pytest.approx([-4.0, 8.0], rel=1e-15)
    one = qsgd_update(th, [0.1, 0.3], 40.0, 0.05)
    two = qsgd_update(th, [0.1, 0.3], 40.0, 0.05, QsgdConfig(gain_matrix=((2.0, 0.0), (0.0, 2.0))))
    assert two - th == pytest.approx(2 * (one - th), rel=1e-15)


vec = st.lists(st.floats(-100, 100), min_size=2, max_size=2)


@given(vec, vec, st.floats(0, 500), st.floats(1e-4, 0.1))
def test_update_direction(theta, xi, gam, a):
    delta = qsgd_update(theta, xi, gam, a) - np.asarray(theta)
    expected = -a * gam * np.asarray(xi)
    assert delta == pytest.approx(expected, rel=1e-12, abs=1e-9)
    assert np.linalg.norm(expected) == pytest.approx(a * gam * np.linalg.norm(xi), rel=1e-12)


def test_update_errors():
    with pytest.raises(QsgdError, match="iteration 7"):
        qsgd_update([0.0, float("nan")], [1.0, 1.0], 1.0, 0.1, n=7)
    with pytest.raises(QsgdError):
        qsgd_update([0.0, 0.0], [1.0, 1.0], -1.0, 0.1)
    with pytest.raises(QsgdError):
        qsgd_update([1e308, 0.0], [1.0, 1.0], -1e308, 1.0)


def test_config_validation():
    for bad in [dict(g=0.0), dict(rho=0.5), dict(rho=1.1), dict(epsilon=0.0), dict(n_iters=0),
                dict(gain_matrix=((1.0, 2.0), (0.0, 1.0))),
                dict(gain_matrix=((1.0, 2.0), (2.0, 1.0)))]:
        with pytest.raises(ValueError):
            QsgdConfig(**bad)
    assert QsgdConfig.from_dict(CFG.to_dict()) == CFG


def test_zero_objective_keeps_theta():
    pc = sample_probing_config(0)
    th, trace = run_qsgd(lambda p: 0.0, [0.2, -0.4], CFG, pc)
    assert th.tolist() == [0.2, -0.4]
    assert len(trace) == 50


def test_single_iteration_composition():
    pc = sample_probing_config(1, clock_mode="iteration_index")
    cfg = QsgdConfig(n_iters=1)
    f = lambda p: float(p[0] ** 2 + 3 * p[1] ** 2)  # noqa: E731
    th0 = np.array([0.5, -0.25])
    xi0 = probe_value(pc, 0.0)
    expected = th0 - step_size(0) * 1.0 * xi0 * f(th0 + xi0)
    th, _ = run_qsgd(f, th0, cfg, pc)
    assert np.array_equal(th, expected)


def test_trace_integrity_and_replay():
    pc = sample_probing_config(2)
    f = lambda p: float(abs(p[0] - 1.0) + abs(p[1] + 2.0))  # noqa: E731
    th_final, trace = run_qsgd(f, [0.0, 0.0], CFG, pc)
    times = probe_times(pc, CFG.n_iters, lambda k: step_size(k, CFG))
    a = [r.a for r in trace]
    assert all(x > y for x, y in zip(a, a[1:]))
    theta = trace.records[0].theta
    for k, r in enumerate(trace):
        assert r.n == k and r.t == times[k]
        assert np.array_equal(r.theta, theta)
        assert np.array_equal(r.psi, r.theta + CFG.epsilon * r.xi)
        assert r.gamma_value == f(r.psi)
        theta = qsgd_update(r.theta, r.xi, r.gamma_value, r.a, CFG)
    assert np.array_equal(theta, th_final)


def test_quadratic_descends():
    pc = sample_probing_config(1)
    cfg = QsgdConfig(n_iters=3000, g=0.05, rho=0.8)
    f = lambda p: float((p[0] - 1.0) ** 2 + (p[1] + 0.5) ** 2)  # noqa: E731
    th, _ = run_qsgd(f, [3.0, 2.0], cfg, pc)
    assert f(th) < 0.25 * f(np.array([3.0, 2.0]))


def test_divergence_guard():
    pc = sample_probing_config(5, clock_mode="iteration_index")
    with pytest.raises(QsgdDivergence) as info:
        run_qsgd(lambda p: 1e12, [0.0, 0.0], CFG, pc)
    assert info.value.iteration is not None


def test_objective_error_carries_iteration():
    pc = sample_probing_config(6)

    def f(p):
        if f.calls == 3:
            raise RuntimeError("boom")
        f.calls += 1
        return 1.0
    f.calls = 0
    with pytest.raises(QsgdError, match="iteration 3"):
        run_qsgd(f, [0.0, 0.0], CFG, pc)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        run_qsgd(lambda p: 0.0, [0.0, 0.0, 0.0], CFG, sample_probing_config(0))
