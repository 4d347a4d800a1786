import csv
import json
import math

import numpy as np
import pytest

from apcsim.approx_proj import AngleSchedule, DepthSchedule, Exact, RandomInCone
from apcsim.convex import Ball
from apcsim.engine import (
    NetworkState, Trace, config_hash, consensus_diameter, node_streams, simulate, step,
    write_artifacts,
)
from apcsim.network import RandomUJSCSchedule, StaticSchedule
from apcsim.presets import DISK_WEIGHTS, preset

DISKS = (Ball((1, 0), 1), Ball((-1, 0), 1), Ball((0, -1), 1))
STATIC = StaticSchedule(DISK_WEIGHTS)


def _zero(X):
    return np.zeros(len(X))


def _ball_proj(c, x):
    d = np.subtract(x, c)
    n = math.hypot(*d)
    return np.add(c, d / n) if n > 1 else np.asarray(x, dtype=float)


def test_single_node_exact_step_is_a_projection():
    b = Ball((0, 0), 1)
    s = step(NetworkState(0, [[3.0, 4.0]]), [b], StaticSchedule([[1.0]]), AngleSchedule(),
             DepthSchedule("constant", 1.0), Exact(), node_streams(0, 1))
    assert s.step == 1
    assert np.allclose(s.points, [[0.6, 0.8]], atol=1e-15)


def test_disk_step_matches_hand_computation():
    x = np.array([1.8, 0.8])
    s = step(NetworkState(0, np.tile(x, (3, 1))), DISKS, STATIC, AngleSchedule(),
             DepthSchedule("constant", 0.5), Exact(), node_streams(0, 3))
    pa = [0.5 * x + 0.5 * _ball_proj(c.center, x) for c in DISKS]
    assert pa[0] == pytest.approx((1.7535533905932737, 0.7535533905932737), abs=1e-15)
    expect = 0.5 * pa[0] + 0.25 * pa[1] + 0.25 * pa[2]
    assert s.points[0] == pytest.approx(expect, abs=1e-15)


def test_adversarial_first_step_on_the_ball():
    cfg = preset("prop2_ball", horizon=1)
    tr = simulate(cfg.bodies, cfg.schedule, cfg.angles, cfg.depths, cfg.policy,
                  cfg.initial_points(), 1, _zero)
    assert tr.dist_own[1][0] == pytest.approx(math.sqrt(10) - 1, abs=1e-12)


def test_zero_horizon_records_only_the_start():
    cfg = preset("three_disks")
    tr = simulate(cfg.bodies, cfg.schedule, cfg.angles, cfg.depths, cfg.policy,
                  cfg.initial_points(), 0, cfg.build_oracle().distances)
    assert tr.steps == [0]
    assert tr.final_state.step == 0
    assert tr.h[0] == pytest.approx(math.hypot(1.8, 0.8), abs=1e-12)


def test_mismatched_sizes_rejected():
    with pytest.raises(ValueError):
        step(NetworkState(0, np.zeros((2, 2))), DISKS, STATIC, AngleSchedule(), DepthSchedule(),
             Exact(), node_streams(0, 3))


def test_evaluation_order_does_not_matter():
    sched = RandomUJSCSchedule(3, 2, 0.1, seed=4)
    X = np.array([[3.0, 1.0], [-2.0, 2.0], [0.5, -3.0]])
    ang, dep, pol = AngleSchedule("constant", 0.7), DepthSchedule("constant", 0.8), RandomInCone()
    a = step(NetworkState(0, X), DISKS, sched, ang, dep, pol, node_streams(5, 3))
    b = step(NetworkState(0, X), DISKS, sched, ang, dep, pol, node_streams(5, 3), order=[2, 0, 1])
    assert np.array_equal(a.points, b.points)


def test_envelope_grows_at_most_by_the_angle_factor():
    z = np.zeros(2)  # the common point
    sched = RandomUJSCSchedule(3, 2, 0.1, seed=1)
    ang, dep = AngleSchedule("constant", 0.9), DepthSchedule("harmonic", 1.0)
    worst = []

    def check(before, after):
        k = before.step
        r0 = np.linalg.norm(before.points - z, axis=1).max()
        r1 = np.linalg.norm(after.points - z, axis=1).max()
        worst.append(r1 - (1 + dep(k, 3).max() * math.tan(ang(k))) * r0)

    x0 = np.random.default_rng(0).uniform(-20, 20, size=(3, 2))
    simulate(DISKS, sched, ang, dep, RandomInCone(), x0, 300, _zero, seed=3, on_step=check)
    assert max(worst) <= 1e-9


@pytest.mark.parametrize("depth", [1.0, 0.5, 0.1])
def test_zero_angle_distance_to_common_point_never_grows(depth):
    sched = RandomUJSCSchedule(3, 2, 0.1, seed=2)
    radii = []
    x0 = np.random.default_rng(1).uniform(-10, 10, size=(3, 2))
    simulate(DISKS, sched, AngleSchedule(), DepthSchedule("constant", depth), Exact(), x0, 300, _zero,
             on_step=lambda a, b: radii.append(np.linalg.norm(b.points, axis=1).max()))
    assert np.all(np.diff(radii) <= 1e-12)


def test_divergence_halts_and_keeps_the_trace():
    cfg = preset("prop3_diverge")
    tr = simulate(cfg.bodies, cfg.schedule, cfg.angles, cfg.depths, cfg.policy,
                  cfg.initial_points(), 1000, cfg.build_oracle().distances)
    assert tr.diverged and tr.diverged_step == tr.steps[-1] < 1000
    assert np.abs(tr.points[-1]).max() > 1e12
    assert all(np.all(np.isfinite(p)) for p in tr.points)


def test_intersection_distance_dominates_own_distance():
    cfg = preset("three_disks", horizon=200)
    tr = simulate(cfg.bodies, cfg.schedule, cfg.angles, cfg.depths, cfg.policy,
                  cfg.initial_points(), 200, cfg.build_oracle().distances)
    for own, h in zip(tr.dist_own, tr.h):
        assert h >= own.max() - 1e-12


def test_record_stride_keeps_the_last_step():
    cfg = preset("three_disks")
    tr = simulate(cfg.bodies, cfg.schedule, cfg.angles, cfg.depths, cfg.policy,
                  cfg.initial_points(), 25, _zero, record_stride=10)
    assert tr.steps == [0, 10, 20, 25]


def test_csv_layout(tmp_path):
    cfg = preset("three_disks", horizon=3)
    tr = simulate(cfg.bodies, cfg.schedule, cfg.angles, cfg.depths, cfg.policy,
                  cfg.initial_points(), 3, cfg.build_oracle().distances)
    rows = list(csv.reader(tr.write_csv(tmp_path / "t.csv").open()))
    assert rows[0] == ["k", "node_id", "x_0", "x_1", "dist_own_set", "dist_intersection", "h",
                       "consensus_diameter"]
    assert len(rows) == 1 + 4 * 3
    assert [float(v) for v in rows[1][2:4]] == [1.8, 0.8]


def test_artifacts(tmp_path):
    cfg = preset("prop2_ball", horizon=5)
    from apcsim.engine import run

    summary = write_artifacts(run(cfg), cfg, tmp_path)
    on_disk = json.loads((tmp_path / "summary.json").read_text())
    assert on_disk == summary
    assert on_disk["config_hash"] == config_hash(cfg.to_dict())
    assert {"final_h", "final_diameter", "diverged", "wall_time", "seed"} <= on_disk.keys()


def test_consensus_diameter():
    assert consensus_diameter(np.array([[0, 0], [3, 4], [1, 1]])) == 5.0


def test_node_streams_are_independent_of_count():
    a = node_streams(9, 2)[1].random(3)
    b = node_streams(9, 5)[1].random(3)
    assert np.array_equal(a, b)


def test_empty_trace_len():
    assert len(Trace(2, 2)) == 0
