"""Time-varying directed communication graphs.

Arc convention: ``weights[i, j] > 0`` means node ``i`` reads node ``j``'s value
(``j`` is an in-neighbour of ``i``). Every node always reads itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .convex import EPS


class GraphError(ValueError):
    """Weights violate the self-loop, row-stochastic or floor rules."""


@dataclass(frozen=True, eq=False)
class Digraph:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] == 0:
            raise GraphError(f"weights must be a square matrix, got shape {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def arcs(self) -> np.ndarray:
        return self.weights > 0

    def violations(self, eta: float | None = None) -> list[str]:
        """Human-readable list of broken weight rules (empty if none)."""
        w = self.weights
        out = []
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            out.append("weights must be finite and nonnegative")
        if np.any(np.diag(w) <= 0):
            out.append("every node needs a self-loop (a_ii > 0)")
        sums = w.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > EPS)
        for i in bad:
            out.append(f"row {i} sums to {sums[i]:.12g}, not 1")
        if eta is not None:
            low = w[(w > 0) & (w < eta - EPS)]
            if low.size:
                out.append(f"nonzero weight {low.min():.6g} below floor eta={eta}")
        return out

    def validate(self, eta: float | None = None) -> "Digraph":
        problems = self.violations(eta)
        if problems:
            raise GraphError("; ".join(problems))
        return self

    def __eq__(self, other):
        return isinstance(other, Digraph) and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(self.weights.tobytes())


def is_strongly_connected(arcs: np.ndarray) -> bool:
    ncomp, _ = connected_components(np.asarray(arcs, dtype=np.int8), directed=True,
                                    connection="strong")
    return ncomp == 1


class GraphSchedule:
    """Base for schedules; ``weights_at(k)`` must be a pure function of ``k``."""

    kind = ""
    n: int
    eta: float

    def weights_at(self, k: int) -> Digraph:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


class StaticSchedule(GraphSchedule):
    kind = "static"

    def __init__(self, graph: Digraph | Any, eta: float | None = None):
        self.graph = graph if isinstance(graph, Digraph) else Digraph(graph)
        w = self.graph.weights
        self.n = self.graph.n
        self.eta = float(eta) if eta is not None else float(w[w > 0].min())
        self.graph.validate(self.eta)

    def weights_at(self, k):
        return self.graph

    def to_dict(self):
        return {"kind": "static", "weights": self.graph.weights.tolist(), "eta": self.eta}


class PeriodicSchedule(GraphSchedule):
    kind = "periodic"

    def __init__(self, graphs: Sequence[Digraph | Any], eta: float | None = None):
        if not graphs:
            raise GraphError("periodic schedule needs at least one graph")
        self.graphs = tuple(g if isinstance(g, Digraph) else Digraph(g) for g in graphs)
        if len({g.n for g in self.graphs}) != 1:
            raise GraphError("periodic graphs differ in node count")
        self.n = self.graphs[0].n
        self.eta = float(eta) if eta is not None else float(
            min(g.weights[g.weights > 0].min() for g in self.graphs))
        for g in self.graphs:
            g.validate(self.eta)

    def weights_at(self, k):
        return self.graphs[k % len(self.graphs)]

    def to_dict(self):
        return {"kind": "periodic", "weights": [g.weights.tolist() for g in self.graphs],
                "eta": self.eta}


@dataclass(frozen=True)
class RandomUJSCSchedule(GraphSchedule):
    """Seeded random digraphs whose union over any ``T`` consecutive steps is strongly connected.

    A random Hamiltonian cycle is installed at every step ``k`` with
    ``k % T == phase`` (``phase`` drawn from the seed), so each length-``T``
    window, aligned or not, contains one. Other arcs appear independently
    with probability ``arc_prob``. Row weights are ``eta`` plus a random
    share of the remaining mass, so they sum to one and respect the floor.
    """

    n: int
    T: int
    eta: float
    seed: int = 0
    arc_prob: float = 0.3
    phase: int = field(init=False)

    kind = "random_ujsc"

    def __post_init__(self):
        if self.n < 1 or self.T < 1:
            raise GraphError("random schedule needs n >= 1 and T >= 1")
        if not 0 < self.eta < 1:
            raise GraphError("eta must lie in (0, 1)")
        if self.n > math.floor(1.0 / self.eta + 1e-12):
            raise GraphError(
                f"eta={self.eta} cannot be respected with up to {self.n} in-neighbours "
                f"(at most floor(1/eta) = {math.floor(1 / self.eta + 1e-12)})")
        if not 0 <= self.arc_prob <= 1:
            raise GraphError("arc_prob must lie in [0, 1]")
        object.__setattr__(self, "phase", int(np.random.default_rng([self.seed]).integers(self.T)))

    def weights_at(self, k):
        return _random_graph(self.n, self.T, self.eta, self.seed, self.arc_prob, self.phase, int(k))

    def to_dict(self):
        return {"kind": "random_ujsc", "n": self.n, "T": self.T, "eta": self.eta,
                "seed": self.seed, "arc_prob": self.arc_prob}


@lru_cache(maxsize=4096)
def _random_graph(n, T, eta, seed, arc_prob, phase, k) -> Digraph:
    rng = np.random.default_rng([seed, k])
    perm = rng.permutation(n)
    arcs = rng.random((n, n)) < arc_prob
    np.fill_diagonal(arcs, True)
    if k % T == phase:
        arcs[np.roll(perm, -1), perm] = True
    share = rng.random((n, n)) + 1e-3
    w = np.where(arcs, share, 0.0)
    deg = arcs.sum(axis=1)
    w = eta * arcs + (1.0 - deg * eta)[:, None] * w / w.sum(axis=1, keepdims=True)
    return Digraph(w)


def schedule_from_dict(spec: dict[str, Any]) -> GraphSchedule:
    kind = spec.get("kind")
    if kind == "static":
        return StaticSchedule(spec["weights"], spec.get("eta"))
    if kind == "periodic":
        return PeriodicSchedule(spec["weights"], spec.get("eta"))
    if kind == "random_ujsc":
        return RandomUJSCSchedule(int(spec["n"]), int(spec["T"]), float(spec["eta"]),
                                  int(spec.get("seed", 0)), float(spec.get("arc_prob", 0.3)))
    raise GraphError(f"unknown graph kind {kind!r}; expected static, periodic or random_ujsc")


def weights_at(schedule: GraphSchedule, k: int) -> Digraph:
    if k < 0:
        raise ValueError("step index must be nonnegative")
    return schedule.weights_at(k)


def check_ujsc(schedule: GraphSchedule, T: int, horizon: int) -> bool:
    """Whether every window ``[k, k + T)`` with ``k <= horizon - T`` has a strongly connected union.

    Only a finite horizon can be inspected, so this is a sanity gate rather
    than a proof of the assumption.
    """
    if T < 1 or horizon < T:
        raise ValueError("need T >= 1 and horizon >= T")
    arcs = [schedule.weights_at(s).arcs for s in range(horizon)]
    for k in range(horizon - T + 1):
        union = np.logical_or.reduce(arcs[k:k + T])
        if not is_strongly_connected(union):
            return False
    return True


def transition_product(schedule: GraphSchedule, k: int, s: int) -> np.ndarray:
    """Ordered product ``A(k) ... A(s+1) A(s)``."""
    if k < s or s < 0:
        raise ValueError(f"transition product needs k >= s >= 0, got k={k}, s={s}")
    phi = schedule.weights_at(s).weights.copy()
    for t in range(s + 1, k + 1):
        phi = schedule.weights_at(t).weights @ phi
    return phi


def check_phi_bound(schedule: GraphSchedule, s: int, k: int, eta: float, T: int) -> bool:
    """Whether every entry of ``transition_product(schedule, k, s)`` reaches ``eta**((n-1)T)``.

    The comparison allows a relative slack of ``EPS`` on the bound.
    """
    n = schedule.n
    span = (n - 1) * T
    if k < s + span - 1:
        raise ValueError(f"bound needs k >= s + (n-1)T - 1 = {s + span - 1}, got k={k}")
    bound = eta ** span
    return bool(transition_product(schedule, k, s).min() >= bound * (1.0 - EPS))
