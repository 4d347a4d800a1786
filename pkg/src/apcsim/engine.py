"""The approximate projected consensus recursion and its trace.

One step: every node ``j`` forms a single approximate projection ``P^a_j`` of
its own state (shared by all of its out-neighbours), then node ``i`` moves to
``sum_j a_ij(k) P^a_j``.
"""
from __future__ import annotations

import csv
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable, Sequence

import numpy as np

from .approx_proj import AngleSchedule, DepthSchedule, SelectionPolicy, approx_projection
from .convex import ConvexBody
from .network import GraphSchedule

if TYPE_CHECKING:
    from .config import ExperimentConfig

DIVERGENCE_LIMIT = 1e12


@dataclass
class NetworkState:
    step: int
    points: np.ndarray  # (n, m)

    def __post_init__(self):
        self.points = np.array(self.points, dtype=float, ndmin=2)


def node_streams(seed: int, n: int) -> list[np.random.Generator]:
    """One independent generator per node, keyed by (seed, node index)."""
    return [np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,))) for i in range(n)]


def step(
    state: NetworkState,
    bodies: Sequence[ConvexBody],
    schedule: GraphSchedule,
    angles: AngleSchedule,
    depths: DepthSchedule,
    policy: SelectionPolicy,
    rngs: Sequence[np.random.Generator],
    order: Sequence[int] | None = None,
) -> NetworkState:
    """Advance every node by one round. ``order`` only permutes evaluation, never the result."""
    X = state.points
    n = X.shape[0]
    if len(bodies) != n or len(rngs) != n:
        raise ValueError(f"{n} nodes but {len(bodies)} bodies and {len(rngs)} streams")
    k = state.step
    theta = angles(k)
    alpha = depths(k, n)
    Pa = np.empty_like(X)
    for j in order if order is not None else range(n):
        Pa[j] = approx_projection(bodies[j], X[j], theta, alpha[j], policy, rngs[j])
    A = schedule.weights_at(k).weights
    if A.shape[0] != n:
        raise ValueError(f"graph has {A.shape[0]} nodes, state has {n}")
    return NetworkState(k + 1, A @ Pa)


def consensus_diameter(X: np.ndarray) -> float:
    diff = X[:, None, :] - X[None, :, :]
    return float(np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).max())


@dataclass
class Trace:
    n: int
    m: int
    steps: list[int] = field(default_factory=list)
    points: list[np.ndarray] = field(default_factory=list)
    dist_own: list[np.ndarray] = field(default_factory=list)
    dist_int: list[np.ndarray] = field(default_factory=list)
    h: list[float] = field(default_factory=list)
    diameter: list[float] = field(default_factory=list)
    diverged: bool = False
    diverged_step: int | None = None
    final_state: NetworkState | None = None
    wall_time: float = 0.0

    def record(self, k, X, own, inter):
        self.steps.append(int(k))
        self.points.append(X.copy())
        self.dist_own.append(own)
        self.dist_int.append(inter)
        self.h.append(float(inter.max()))
        self.diameter.append(consensus_diameter(X))

    def __len__(self):
        return len(self.steps)

    @property
    def final_h(self) -> float:
        return self.h[-1]

    @property
    def final_diameter(self) -> float:
        return self.diameter[-1]

    def header(self) -> list[str]:
        return (["k", "node_id"] + [f"x_{d}" for d in range(self.m)]
                + ["dist_own_set", "dist_intersection", "h", "consensus_diameter"])

    def rows(self):
        for r, k in enumerate(self.steps):
            for i in range(self.n):
                yield ([k, i] + [repr(float(c)) for c in self.points[r][i]]
                       + [repr(float(self.dist_own[r][i])), repr(float(self.dist_int[r][i])),
                          repr(self.h[r]), repr(self.diameter[r])])

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="ascii") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header())
            w.writerows(self.rows())
        return path

    def summary(self) -> dict[str, Any]:
        return {
            "records": len(self),
            "steps_run": self.final_state.step if self.final_state else self.steps[-1],
            "initial_h": self.h[0],
            "final_h": self.final_h,
            "final_diameter": self.final_diameter,
            "diverged": self.diverged,
            "diverged_step": self.diverged_step,
            "wall_time": self.wall_time,
        }


def simulate(
    bodies: Sequence[ConvexBody],
    schedule: GraphSchedule,
    angles: AngleSchedule,
    depths: DepthSchedule,
    policy: SelectionPolicy,
    x0: np.ndarray,
    horizon: int,
    distance_to_intersection: Callable[[np.ndarray], np.ndarray],
    seed: int = 0,
    record_stride: int = 1,
    on_step: Callable[[NetworkState, NetworkState], None] | None = None,
) -> Trace:
    """Run ``horizon`` rounds from ``x0`` (n, m), recording metrics every ``record_stride`` steps.

    The final step is always recorded. If a coordinate leaves
    ``[-DIVERGENCE_LIMIT, DIVERGENCE_LIMIT]`` or becomes non-finite the run
    halts with ``diverged`` set and the offending state recorded.
    """
    if horizon < 0 or record_stride < 1:
        raise ValueError("horizon must be >= 0 and record_stride >= 1")
    t0 = time.perf_counter()
    state = NetworkState(0, x0)
    n, m = state.points.shape
    rngs = node_streams(seed, n)
    trace = Trace(n, m)

    def metrics(X):
        finite = np.all(np.isfinite(X), axis=1)
        own = np.full(n, np.nan)
        inter = np.full(n, np.nan)
        for i in np.flatnonzero(finite):
            own[i] = bodies[i].distance(X[i])
        if np.any(finite):
            inter[finite] = distance_to_intersection(X[finite])
        return own, inter

    trace.record(0, state.points, *metrics(state.points))
    while state.step < horizon:
        new = step(state, bodies, schedule, angles, depths, policy, rngs)
        if on_step is not None:
            on_step(state, new)
        state = new
        X = state.points
        blown = not np.all(np.isfinite(X)) or np.abs(X).max() > DIVERGENCE_LIMIT
        if blown or state.step % record_stride == 0 or state.step == horizon:
            trace.record(state.step, X, *metrics(X))
        if blown:
            trace.diverged = True
            trace.diverged_step = state.step
            break
    trace.final_state = state
    trace.wall_time = time.perf_counter() - t0
    return trace


def run(config: "ExperimentConfig", horizon: int | None = None, oracle=None) -> Trace:
    """Run a validated experiment; ``horizon``/``oracle`` override the config's own."""
    oracle = oracle or config.build_oracle()
    return simulate(
        config.bodies, config.schedule, config.angles, config.depths, config.policy,
        config.initial_points(), config.horizon if horizon is None else horizon,
        oracle.distances, seed=config.seed, record_stride=config.record_stride,
    )


def config_hash(config_dict: dict[str, Any]) -> str:
    blob = json.dumps(config_dict, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def write_artifacts(trace: Trace, config: "ExperimentConfig", out_dir: str | Path) -> dict[str, Any]:
    """Write ``trace.csv`` and ``summary.json`` into ``out_dir``; return the summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace.write_csv(out / "trace.csv")
    summary = trace.summary()
    cfg = config.to_dict()
    summary.update({"name": config.name, "seed": config.seed, "config_hash": config_hash(cfg),
                    "expect_divergence": config.expect_divergence})
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary
