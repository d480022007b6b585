import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsgd_car.energy import Theta, policy_action
from qsgd_car.env import DEFAULT_ENV, State
from qsgd_car.partition import (DEFAULT_PARTITION, PartitionedTheta, RegionPartition,
                                partitioned_action, region_of)

P = DEFAULT_ENV
states = st.builds(State, st.floats(P.z_min, P.z_goal), st.floats(P.v_min, P.v_max))
theta_st = st.builds(Theta, st.floats(-10, 10), st.floats(-10, 10))
pts = st.lists(theta_st, min_size=4, max_size=4).map(PartitionedTheta)


def test_defaults_are_box_midpoint():
    assert DEFAULT_PARTITION.z_split == pytest.approx((P.z_min + P.z_goal) / 2)
    assert DEFAULT_PARTITION.v_split == 0.0


@pytest.mark.parametrize("s, region", [
    (State(0.2, 0.03), 1),
    (State(-0.35, 0.0), 1),
    (State(-1.0, 0.03), 2),
    (State(-1.0, -0.05), 3),
    (State(0.2, -0.01), 4),
])
def test_region_examples(s, region):
    assert region_of(s) == region


def test_region_rejects_out_of_box():
    with pytest.raises(ValueError):
        region_of(State(0.6, 0.0))


def test_partition_validation():
    with pytest.raises(ValueError):
        RegionPartition(z_split=0.5).validate()
    with pytest.raises(ValueError):
        RegionPartition(v_split=0.07).validate()
    RegionPartition(z_split=0.0).validate()


def test_grid_partition_disjoint_cover():
    counts = {1: 0, 2: 0, 3: 0, 4: 0}
    for z in np.linspace(P.z_min, P.z_goal, 69):
        for v in np.linspace(P.v_min, P.v_max, 57):
            counts[region_of(State(z, v))] += 1
    assert sum(counts.values()) == 69 * 57
    assert all(c > 0 for c in counts.values())


@given(states)
def test_sub_boxes_agree_with_region_of(s):
    r = region_of(s)
    hits = []
    for q in (1, 2, 3, 4):
        (zl, zh), (vl, vh) = DEFAULT_PARTITION.bounds(q)
        # sub-boxes are half-open on the split side
        z_ok = zl <= s.z <= zh if q in (1, 4) else zl <= s.z < zh
        v_ok = vl <= s.v <= vh if q in (1, 2) else vl <= s.v < vh
        if z_ok and v_ok:
            hits.append(q)
    assert hits == [r]


def test_partitioned_examples():
    pt = PartitionedTheta([(1, 0), (-1, 0), (-1, 0), (-1, 0)])
    assert partitioned_action(pt, State(0.2, 0.03)) == 1.0
    assert partitioned_action(pt, State(-1.0, 0.03)) == -1.0
    assert partitioned_action(pt, State(-1.0, 0.0)) == 0.0


def test_partitioned_theta_shape():
    with pytest.raises(ValueError):
        PartitionedTheta([(1, 0)] * 3)
    with pytest.raises(ValueError):
        PartitionedTheta([(1, 0)] * 3 + [(float("nan"), 0)])
    pt = PartitionedTheta([(i, -i) for i in range(4)])
    assert pt.for_region(3) == Theta(2.0, -2.0)
    assert pt.as_rows()[0] == [0.0, 0.0]


@given(theta_st, states)
def test_reduction_to_uniform(th, s):
    assert partitioned_action(PartitionedTheta.uniform(th), s) == policy_action(th, s)


@given(pts, theta_st, st.sampled_from([1, 2, 3, 4]), states)
def test_locality(pt, new, r, s):
    if region_of(s) != r:
        assert partitioned_action(pt.replace(r, new), s) == partitioned_action(pt, s)
