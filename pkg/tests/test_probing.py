import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsgd_car.probing import (ITERATION_INDEX, ODE_TIME, ProbingConfig, SinusoidMixture,
                              probe_times, probe_value, sample_probing_config)


def cfg(*dims, mode=ODE_TIME):
    return ProbingConfig(tuple(SinusoidMixture(tuple(d)) for d in dims), mode)


def test_zero_at_origin():
    pc = sample_probing_config(0)
    assert np.array_equal(probe_value(pc, 0.0), np.zeros(2))


def test_quarter_period():
    pc = cfg([(1.0, 0.3, 0.0)])
    assert probe_value(pc, 5 / 6)[0] == pytest.approx(1.0, abs=1e-14)


def test_two_term_mixture():
    # periodicity reduction done in exact rationals
    t = Fraction(5, 6)
    frac_slow = (Fraction(3, 10) * t) % 1
    frac_fast = (50 * t) % 1
    assert frac_slow == Fraction(1, 4) and frac_fast == Fraction(2, 3)
    expected = 0.5 * math.sin(2 * math.pi * frac_slow) + 0.25 * math.sin(2 * math.pi * frac_fast)
    assert expected == pytest.approx(0.5 - 0.25 * math.sqrt(3) / 2, abs=1e-15)
    pc = cfg([(0.5, 0.3, 0.0), (0.25, 50.0, 0.0)])
    assert probe_value(pc, 5 / 6)[0] == pytest.approx(expected, abs=1e-12)


def test_phase_in_cycles():
    pc = cfg([(2.0, 1.0, 0.25)])
    assert probe_value(pc, 0.0)[0] == pytest.approx(2.0)


def test_sampler_defaults_and_determinism():
    a = sample_probing_config(42)
    assert a == sample_probing_config(42)
    assert a != sample_probing_config(43)
    assert a.d == 2 and a.clock_mode == ODE_TIME
    for m in a.dims:
        assert [w for _, w, _ in m.terms] == [0.3, 50.0]
        assert [p for _, _, p in m.terms] == [0.0, 0.0]
        assert all(0.0 < amp < 1.0 for amp, _, _ in m.terms)


def test_sampler_independent_dimensions():
    pc = sample_probing_config(7, d=3, ell=4, freqs=(0.1, 0.2, 0.3, 0.4))
    amps = np.array([[a for a, _, _ in m.terms] for m in pc.dims])
    assert amps.shape == (3, 4)
    assert len(np.unique(amps)) == 12


def test_sampler_accepts_generator():
    rng1, rng2 = np.random.default_rng(9), np.random.default_rng(9)
    assert sample_probing_config(rng1) == sample_probing_config(rng2)


def test_validation():
    with pytest.raises(ValueError):
        SinusoidMixture(())
    with pytest.raises(ValueError):
        SinusoidMixture(((1.0, 0.0, 0.0),))
    with pytest.raises(ValueError):
        ProbingConfig((), ODE_TIME)
    with pytest.raises(ValueError):
        cfg([(1.0, 1.0, 0.0)], mode="wallclock")
    with pytest.raises(ValueError):
        sample_probing_config(0, d=0)
    with pytest.raises(ValueError):
        probe_value(sample_probing_config(0), -1.0)


@given(st.integers(0, 2**32 - 1), st.floats(0, 1e4))
def test_amplitude_bound(seed, t):
    pc = sample_probing_config(seed)
    xi = probe_value(pc, t)
    for j, m in enumerate(pc.dims):
        assert abs(xi[j]) <= m.amplitude_bound() + 1e-12


def _vectorised(pc, t):
    return np.array([sum(a * np.sin(2 * np.pi * (w * t + p)) for a, w, p in m.terms)
                     for m in pc.dims])


def test_approximately_zero_mean():
    pc = sample_probing_config(11)
    t = np.linspace(0.0, 1000.0, 1_000_001)
    sig = _vectorised(pc, t)
    for k in range(0, len(t), 99_991):
        assert np.allclose(sig[:, k], probe_value(pc, float(t[k])), atol=1e-9)
    means = np.trapezoid(sig, t, axis=1) / 1000.0
    for j, m in enumerate(pc.dims):
        assert abs(means[j]) <= 0.01 * m.amplitude_bound()


def test_components_not_degenerate():
    pc = sample_probing_config(12)
    t = np.linspace(0.0, 1 / 0.3, 20_001)
    sig = _vectorised(pc, t)
    sv = np.linalg.svd(sig @ sig.T / len(t), compute_uv=False)
    assert sv[-1] / sv[0] > 1e-6


def test_probe_clock_modes():
    gain = lambda n: 0.08 / (1 + n) ** 0.95  # noqa: E731
    ode = probe_times(sample_probing_config(0), 4, gain)
    assert ode[0] == 0.0
    assert ode[1] == gain(1)
    assert ode[3] == pytest.approx(gain(1) + gain(2) + gain(3), rel=1e-15)
    idx = probe_times(sample_probing_config(0, clock_mode=ITERATION_INDEX), 4, gain)
    assert idx == [0.0, 1.0, 2.0, 3.0]


def test_integer_clock_aliases_fast_component():
    pc = cfg([(1.0, 50.0, 0.0)], mode=ITERATION_INDEX)
    for t in probe_times(pc, 20, lambda n: 1.0):
        assert abs(probe_value(pc, t)[0]) < 1e-9


def test_round_trip_dict():
    pc = sample_probing_config(3)
    assert ProbingConfig.from_dict(pc.to_dict()) == pc
