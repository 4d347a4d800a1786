import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apcsim.network import (
    Digraph, GraphError, PeriodicSchedule, RandomUJSCSchedule, StaticSchedule, check_phi_bound,
    check_ujsc, is_strongly_connected, schedule_from_dict, transition_product, weights_at,
)

DISK_W = [[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]]


def test_static_schedule_returns_the_matrix_at_any_step():
    s = StaticSchedule(DISK_W)
    for k in (0, 1, 999):
        assert np.array_equal(weights_at(s, k).weights, DISK_W)
    assert s.eta == 0.25


def test_periodic_schedule_indexes_mod_period():
    g0 = [[1.0, 0.0], [0.5, 0.5]]
    g1 = [[0.5, 0.5], [0.0, 1.0]]
    s = PeriodicSchedule([g0, g1])
    assert np.array_equal(weights_at(s, 5).weights, g1)
    assert np.array_equal(weights_at(s, 4).weights, g0)


def test_random_schedule_is_deterministic():
    a = RandomUJSCSchedule(4, 3, 0.1, seed=7)
    b = RandomUJSCSchedule(4, 3, 0.1, seed=7)
    assert weights_at(a, 12) == weights_at(b, 12)
    assert weights_at(a, 12) != weights_at(RandomUJSCSchedule(4, 3, 0.1, seed=8), 12)


def test_negative_step_rejected():
    with pytest.raises(ValueError):
        weights_at(StaticSchedule(DISK_W), -1)


@pytest.mark.parametrize("weights, msg", [
    ([[0.5, 0.4], [0.5, 0.5]], "sums to"),
    ([[0.0, 1.0], [0.5, 0.5]], "self-loop"),
    ([[0.95, 0.05], [0.5, 0.5]], "below floor"),
])
def test_weight_rule_violations(weights, msg):
    with pytest.raises(GraphError, match=msg):
        StaticSchedule(weights, eta=0.1)


def test_floor_must_leave_room_for_every_neighbour():
    with pytest.raises(GraphError, match="floor"):
        RandomUJSCSchedule(11, 2, 0.1)


class TestUJSC:
    def test_complete_static(self):
        assert check_ujsc(StaticSchedule(DISK_W), 1, 10)

    def test_alternating_single_arcs(self):
        even = [[1.0, 0.0], [0.5, 0.5]]   # node 2 reads node 1
        odd = [[0.5, 0.5], [0.0, 1.0]]    # node 1 reads node 2
        s = PeriodicSchedule([even, odd])
        assert check_ujsc(s, 2, 20)
        assert not check_ujsc(s, 1, 20)

    def test_isolated_node(self):
        w = [[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 1.0]]
        assert not check_ujsc(StaticSchedule(w), 3, 10)

    def test_random_schedule_by_construction(self):
        for seed in range(5):
            assert check_ujsc(RandomUJSCSchedule(5, 4, 0.1, seed=seed), 4, 200)

    def test_bad_window(self):
        with pytest.raises(ValueError):
            check_ujsc(StaticSchedule(DISK_W), 5, 3)


def test_random_schedule_respects_rules_over_horizon():
    s = RandomUJSCSchedule(6, 3, 0.15, seed=2)
    for k in range(300):
        g = s.weights_at(k)
        assert g.violations(0.15) == []


def test_strong_connectivity_helper():
    assert is_strongly_connected(np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]], dtype=bool))
    assert not is_strongly_connected(np.eye(3, dtype=bool))


class TestTransitionProducts:
    def test_single_factor(self):
        s = RandomUJSCSchedule(4, 3, 0.1, seed=1)
        assert np.array_equal(transition_product(s, 6, 6), s.weights_at(6).weights)

    def test_averaging_matrix_is_idempotent(self):
        s = StaticSchedule(np.full((4, 4), 0.25))
        assert np.allclose(transition_product(s, 9, 2), 0.25, atol=1e-15)

    def test_order_is_later_times_earlier(self):
        g0 = np.array([[1.0, 0.0], [0.5, 0.5]])
        g1 = np.array([[0.5, 0.5], [0.0, 1.0]])
        s = PeriodicSchedule([g0, g1])
        assert np.allclose(transition_product(s, 1, 0), g1 @ g0)

    def test_reversed_range_rejected(self):
        with pytest.raises(ValueError):
            transition_product(StaticSchedule(DISK_W), 2, 3)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10**6), s=st.integers(0, 50), span=st.integers(0, 30))
    def test_products_stay_row_stochastic(self, seed, s, span):
        sched = RandomUJSCSchedule(5, 3, 0.1, seed=seed)
        phi = transition_product(sched, s + span, s)
        assert np.all(phi >= 0)
        assert np.allclose(phi.sum(axis=1), 1.0, atol=5 * 1e-9 * (span + 1))


class TestPhiBound:
    def test_complete_graph_two_steps(self):
        assert check_phi_bound(StaticSchedule(DISK_W), 0, 1, 0.25, 1)

    def test_disk_graph_three_steps(self):
        assert check_phi_bound(StaticSchedule(DISK_W), 4, 6, 0.25, 1)
        # frozen: min entry of the cubed matrix
        cube = np.linalg.matrix_power(np.array(DISK_W), 3)
        assert cube.min() == pytest.approx(0.328125, abs=1e-15)

    def test_disconnected_graph_fails(self):
        w = [[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 1.0]]
        s = StaticSchedule(w)
        assert not any(check_phi_bound(s, 0, k, 0.5, 1) for k in range(1, 20))

    def test_precondition(self):
        with pytest.raises(ValueError):
            check_phi_bound(RandomUJSCSchedule(4, 3, 0.1), 0, 7, 0.1, 3)

    def test_holds_at_all_admissible_pairs(self):
        s = RandomUJSCSchedule(4, 2, 0.2, seed=3)
        assert check_ujsc(s, 2, 60)
        for start in range(0, 40, 3):
            for k in range(start + 5, start + 12):
                assert check_phi_bound(s, start, k, 0.2, 2)


def test_schedule_dict_round_trip():
    for s in (StaticSchedule(DISK_W), PeriodicSchedule([DISK_W, np.eye(3)]),
              RandomUJSCSchedule(4, 3, 0.1, seed=7)):
        again = schedule_from_dict(s.to_dict())
        assert all(again.weights_at(k) == s.weights_at(k) for k in range(10))
    with pytest.raises(GraphError):
        schedule_from_dict({"kind": "smallworld"})


def test_digraph_is_read_only():
    g = Digraph(DISK_W)
    with pytest.raises(ValueError):
        g.weights[0, 0] = 1.0
