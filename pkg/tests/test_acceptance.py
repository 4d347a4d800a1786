"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

Reference values marked "frozen" were computed once with an independent
high-precision evaluation (mpmath) and pasted in.
"""
import math
import time

import numpy as np
import pytest

from apcsim.approx_proj import (
    AdversarialFixedAngle, Exact, RandomInCone, in_cone, in_upper_halfspace,
    supporting_approx_projection,
)
from apcsim.cli import run_experiment
from apcsim.convex import Ball
from apcsim.engine import run, simulate
from apcsim.network import RandomUJSCSchedule, check_phi_bound
from apcsim.oracle import IntersectionOracle, partial_sums, union_diameter_balls
from apcsim.presets import DISK_CENTERS, DISK_WEIGHTS, PRESET_NAMES, THM1_HORIZON, preset
from shapes import SHAPES, instances, nested_pair, random_body

TOL = 1e-9


def _zero(X):
    return np.zeros(len(X))


def test_criterion_01_projection_properties(verdict):
    rng = np.random.default_rng(20240101)
    worst = dict.fromkeys(["nonexpansive", "lipschitz", "segment", "nested", "scaling"], -np.inf)
    t0 = time.perf_counter()
    for shape in SHAPES:
        for body, X in instances(shape, rng, 10_000):
            Y = rng.normal(scale=3.0, size=X.shape)
            PX, PY = body.project(X), body.project(Y)
            gap = np.linalg.norm(X - Y, axis=1)
            worst["nonexpansive"] = max(worst["nonexpansive"],
                                        (np.linalg.norm(PX - PY, axis=1) - gap).max())
            dX, dY = body.distance(X), body.distance(Y)
            worst["lipschitz"] = max(worst["lipschitz"], (np.abs(dX - dY) - gap).max())
            lam = rng.uniform(0, 1, size=(len(X), 1))
            seg = body.project(lam * X + (1 - lam) * PX)
            worst["segment"] = max(worst["segment"], np.linalg.norm(seg - PX, axis=1).max())
            mix = (1 - lam) * X + lam * PX
            worst["scaling"] = max(worst["scaling"],
                                   np.abs(body.distance(mix) - (1 - lam[:, 0]) * dX).max())
            inner, outer = nested_pair(shape, rng, body.dim)
            lhs = inner.distance(outer.project(X)) ** 2 + outer.distance(X) ** 2
            worst["nested"] = max(worst["nested"], (lhs - inner.distance(X) ** 2).max())
    elapsed = time.perf_counter() - t0
    ok = all(v <= TOL for v in worst.values()) and elapsed < 5.0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    verdict(1, "projection property suite", ok, f"({detail}; {elapsed:.2f}s)")


def test_criterion_02_approximate_projection_membership(verdict):
    rng = np.random.default_rng(7)
    policies = [Exact(), RandomInCone(), AdversarialFixedAngle(3)]
    failures = done = 0
    t0 = time.perf_counter()
    while done < 10_000:
        shape = SHAPES[done % len(SHAPES)]
        body = random_body(shape, rng, int(rng.integers(1, 5)))
        v = rng.normal(scale=4.0, size=body.dim)
        dist = body.distance(v)
        if dist == 0:
            continue
        theta = rng.uniform(0, math.pi / 2)
        alpha = rng.uniform(0, 1)
        policy = policies[int(rng.integers(3))]
        y = supporting_approx_projection(body, v, theta, policy, rng)
        pa = (1 - alpha) * v + alpha * y
        good = (in_cone(body, v, pa, theta) and in_upper_halfspace(body, v, pa)
                and np.linalg.norm(y - body.project(v)) <= math.tan(theta) * dist + TOL)
        failures += not good
        done += 1
    elapsed = time.perf_counter() - t0
    verdict(2, "approximate projection membership", failures == 0 and elapsed < 5.0,
            f"({failures} failures in {done}; {elapsed:.2f}s)")


def test_criterion_03_reduction_to_projected_consensus(verdict):
    cfg = preset("three_disks_exact")
    tr = simulate(cfg.bodies, cfg.schedule, cfg.angles, cfg.depths, cfg.policy,
                  cfg.initial_points(), 2000, _zero)
    # plain projected consensus: x_i <- sum_j a_ij P_j(x_j)
    A = np.array(DISK_WEIGHTS)
    x = [[1.8, 0.8] for _ in range(3)]
    worst = 0.0
    for k in range(2001):
        worst = max(worst, float(np.abs(np.array(x) - tr.points[k]).max()))
        proj = []
        for (cx, cy), (px, py) in zip(DISK_CENTERS, x):
            dx, dy = px - cx, py - cy
            n = math.sqrt(dx * dx + dy * dy)
            proj.append((cx + dx / n, cy + dy / n) if n > 1 else (px, py))
        x = [[sum(A[i][j] * proj[j][d] for j in range(3)) for d in range(2)] for i in range(3)]
    verdict(3, "reduction to projected consensus", worst <= 1e-12, f"(max deviation {worst:.1e})")


def test_criterion_04_half_depth_beats_exact(verdict):
    t0 = time.perf_counter()
    h_apca = run(preset("three_disks", record_stride=2000)).final_h
    h_pca = run(preset("three_disks_exact", record_stride=2000)).final_h
    elapsed = time.perf_counter() - t0
    verdict(4, "alpha=0.5 beats alpha=1 at k=2000", h_apca < h_pca and elapsed < 1.0,
            f"(h {h_apca:.6g} vs {h_pca:.6g}; {elapsed:.2f}s)")


def test_criterion_05_ball_recursion(verdict):
    tr = run(preset("prop2_ball"))
    sim = np.array(tr.h)
    d = [3.0]
    for _ in range(100):
        d.append(math.sqrt(d[-1] ** 2 + 1) - 1)
    d = np.array(d)
    # frozen high-precision iterates
    ref_ok = abs(d[1] - 2.1622776601683793) < 1e-12 and abs(d[5] - 0.024817862834813779) < 1e-12
    err = float(np.abs(sim - d).max())
    first_small = int(np.argmax(sim < 1e-6))
    ok = len(sim) == 101 and err <= TOL and 0 < first_small <= 10 and ref_ok
    verdict(5, "worst-case pi/4 ball recursion", ok,
            f"(max error {err:.1e}; below 1e-6 at k={first_small})")


def test_criterion_06_singleton_distance_frozen(verdict):
    tr = run(preset("prop2_singleton"))
    drift = float(np.abs(np.array(tr.h) - 3.0).max())
    verdict(6, "singleton distance constant under pi/4", len(tr.h) == 101 and drift <= TOL,
            f"(max drift {drift:.1e})")


def test_criterion_07_divergence_beyond_pi_over_4(verdict):
    tr = run(preset("prop3_diverge"))
    growth = np.diff(np.array(tr.h))
    bound = (math.tan(math.pi / 3) - 1) * 5 - 2
    assert bound == pytest.approx(1.6602540378443865, abs=1e-14)
    ok = tr.diverged and len(growth) > 0 and growth.min() >= bound - TOL
    verdict(7, "pi/3 error diverges", ok,
            f"(min growth {growth.min():.4f} >= {bound:.4f}; diverged at k={tr.diverged_step})")


def test_criterion_08_bounded_under_pi_over_8(verdict):
    d_star = union_diameter_balls([Ball(c, 1) for c in DISK_CENTERS])
    bound = 2 * d_star / (1 - math.tan(math.pi / 8)) + 0.01
    assert bound == pytest.approx(13.66685424949238, abs=1e-12)
    K = 50
    rows = []
    for seed in range(10):
        cfg = preset("prop1_bounded", seed=seed,
                     graph={"kind": "random_ujsc", "n": 3, "T": 2, "eta": 0.1, "seed": seed})
        start = np.linalg.norm(cfg.initial_points(), axis=1).max()
        tr = run(cfg)
        tail = max(h for k, h in zip(tr.steps, tr.h) if k >= K)
        rows.append((start, tail, tr.wall_time))
    ok = all(t <= bound and w < 10.0 for _, t, w in rows) and max(s for s, _, _ in rows) <= 100
    verdict(8, "bounded states under pi/8", ok,
            f"(max h over k>={K}: {max(t for _, t, _ in rows):.4f} <= {bound:.4f}; "
            f"slowest seed {max(w for _, _, w in rows):.2f}s)")


def test_criterion_09_harmonic_schedules_converge(verdict):
    cfg = preset("thm1_harmonic")
    report = partial_sums(cfg.depths, cfg.angles, THM1_HORIZON, cfg.n)
    assert report.convergence_hypotheses is True
    tr = run(cfg)
    hit = [k for k, h, d in zip(tr.steps, tr.h, tr.diameter) if h < 1e-2 and d < 1e-3]
    ok = bool(hit)
    verdict(9, "harmonic depth and angle converge", ok,
            f"(h({tr.steps[-1]})={tr.final_h:.4g}, diameter {tr.final_diameter:.1e}; "
            f"first hit {hit[0] if hit else 'none'})")


def test_criterion_10_summable_depths_stall(verdict):
    cfg = preset("thm2_nonconvergence")
    tr = run(cfg)
    prod, k = 1.0, 0
    while True:
        f = 1.0 - cfg.depths(k, 1)[0]
        if f == 1.0:
            break
        prod *= f
        k += 1
    assert prod == pytest.approx(0.5775761901732048, abs=1e-13)  # frozen
    total = partial_sums(cfg.depths, cfg.angles, 200).alpha_plus.total
    d_star = 4.0
    z_dist = tr.h[0]
    floor = prod * z_dist - total * d_star
    threshold = total * d_star / prod
    ok = (z_dist > threshold and floor > 0 and min(tr.h) >= floor
          and tr.final_diameter < 1e-6)
    verdict(10, "summable depths stall above a floor", ok,
            f"(min h {min(tr.h):.4f} >= floor {floor:.4f}; |z*| {z_dist:.4f} > {threshold:.4f}; "
            f"diameter {tr.final_diameter:.1e})")


def test_criterion_11_transition_product_floor(verdict):
    rng = np.random.default_rng(11)
    t0 = time.perf_counter()
    checked = passed = 0
    for seed in range(20):
        sched = RandomUJSCSchedule(4, 3, 0.1, seed=seed)
        for s in rng.integers(0, 500, size=10):
            checked += 1
            passed += check_phi_bound(sched, int(s), int(s) + 8, 0.1, 3)
    elapsed = time.perf_counter() - t0
    verdict(11, "transition product entry floor", passed == checked and elapsed < 5.0,
            f"({passed}/{checked} windows; {elapsed:.2f}s)")


@pytest.mark.slow
def test_criterion_12_oracles_agree(verdict):
    disks = tuple(Ball(c, 1) for c in DISK_CENTERS)
    X = np.random.default_rng(12).uniform(-2, 2, size=(1000, 2))
    grid = IntersectionOracle(disks, "grid", bounds=((-2, 2), (-2, 2)), resolution=1e-3)
    ap = IntersectionOracle(disks, "alternating_projection", tol=1e-10)
    gap = float(np.abs(grid.distances(X) - ap.distances(X)).max())
    verdict(12, "grid and alternating-projection oracles agree", gap <= 2e-3,
            f"(max gap {gap:.2e})")


def test_criterion_13_byte_identical_traces(verdict, tmp_path):
    same = []
    for name in PRESET_NAMES:
        cfg = preset(name)
        run_experiment(cfg, tmp_path / name / "a")
        run_experiment(cfg, tmp_path / name / "b")
        a = (tmp_path / name / "a" / "trace.csv").read_bytes()
        b = (tmp_path / name / "b" / "trace.csv").read_bytes()
        same.append(a == b and len(a) > 0)
    verdict(13, "deterministic traces", all(same), f"({sum(same)}/{len(same)} presets identical)")
