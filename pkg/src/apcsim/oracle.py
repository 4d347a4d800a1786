"""Centralised ground truth: distance to the common intersection and schedule sums.

Two ways to measure the distance from ``x`` to the intersection of the bodies:

``alternating_projection``
    cyclic projections started at ``x``; the distance to the limit point is an
    upper bound on the true distance (the limit is *a* common point, not
    necessarily the nearest one).
``grid``
    2-D only: nearest feasible node of a regular grid, exact up to the grid
    resolution. Points exactly inside every body report 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import zeta

from . import kernels
from .approx_proj import AngleSchedule, DepthSchedule
from .convex import EPS, ConvexBody, DimensionError, NonConvergenceError, body_from_dict

AP_TOL = 1e-10
AP_MAX_SWEEPS = 5_000_000


class ResolutionError(ValueError):
    """The grid has no node inside every body."""


def _cyclic_python(bodies, X0, tol, max_sweeps):
    X = np.array(X0, dtype=float)
    sweeps = np.zeros(len(X), dtype=np.int64)
    conv = np.zeros(len(X), dtype=np.uint8)
    for p, x in enumerate(X):
        for s in range(1, max_sweeps + 1):
            prev = x
            for b in bodies:
                x = b.project(x)
            sweeps[p] = s
            step = x - prev
            if step @ step < tol * tol:
                conv[p] = 1
                break
        X[p] = x
    return X, sweeps, conv


def cyclic_projections(bodies: Sequence[ConvexBody], X0: np.ndarray, tol: float,
                       max_sweeps: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batch form of :func:`alternating_projection_point` that reports instead of raising."""
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    m = bodies[0].dim
    if any(b.dim != m for b in bodies) or X0.shape[1] != m:
        raise DimensionError("bodies and points must share one dimension")
    packed = kernels.pack_bodies(bodies)
    if packed is None:
        return _cyclic_python(bodies, X0, tol, max_sweeps)
    return kernels.cyclic_projection_batch(*packed, X0, tol, max_sweeps)


def alternating_projection_point(bodies: Sequence[ConvexBody], x0: Any, tol: float = AP_TOL,
                                 max_sweeps: int = AP_MAX_SWEEPS) -> np.ndarray:
    """Project cyclically onto ``bodies`` (in list order) until a sweep moves less than ``tol``."""
    X, sweeps, conv = cyclic_projections(bodies, np.asarray(x0, dtype=float)[None, :], tol,
                                         max_sweeps)
    if not conv[0]:
        raise NonConvergenceError(
            f"alternating projections did not settle within {max_sweeps} sweeps",
            last_iterate=X[0])
    return X[0]


@lru_cache(maxsize=8)
def _grid_tree(bodies: tuple[ConvexBody, ...], bounds: tuple[tuple[float, float], ...],
               resolution: float) -> cKDTree:
    axes = []
    for lo, hi in bounds:
        count = int(round((hi - lo) / resolution)) + 1
        axes.append(lo + resolution * np.arange(count))
    xs, ys = axes
    packed = kernels.pack_bodies(bodies)
    if packed is not None:
        mask = kernels.grid_feasible_mask(*packed, xs, ys, EPS).astype(bool)
    else:
        gx, gy = np.meshgrid(xs, ys)
        pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
        ok = np.ones(len(pts), dtype=bool)
        for b in bodies:
            ok &= b.distance(pts) <= EPS
        mask = ok.reshape(len(ys), len(xs))
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        raise ResolutionError(
            f"no grid node at resolution {resolution} lies in every body; refine the grid "
            "or widen its bounds")
    return cKDTree(np.stack([xs[cols], ys[rows]], axis=1))


@dataclass(frozen=True)
class IntersectionOracle:
    bodies: tuple[ConvexBody, ...]
    method: str = "alternating_projection"
    tol: float = AP_TOL
    max_sweeps: int = AP_MAX_SWEEPS
    bounds: tuple[tuple[float, float], ...] | None = None
    resolution: float = 1e-3
    _dim: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bodies = tuple(self.bodies)
        if not bodies:
            raise ValueError("oracle needs at least one body")
        dims = {b.dim for b in bodies}
        if len(dims) != 1:
            raise DimensionError("oracle bodies must share one dimension")
        object.__setattr__(self, "bodies", bodies)
        object.__setattr__(self, "_dim", dims.pop())
        if self.method == "grid":
            if self._dim != 2:
                raise DimensionError("the grid oracle is 2-D only")
            if self.bounds is None or len(self.bounds) != 2:
                raise ValueError("the grid oracle needs bounds [[xlo, xhi], [ylo, yhi]]")
            object.__setattr__(self, "bounds",
                               tuple((float(lo), float(hi)) for lo, hi in self.bounds))
            if not self.resolution > 0:
                raise ValueError("grid resolution must be positive")
        elif self.method != "alternating_projection":
            raise ValueError(f"unknown oracle method {self.method!r}")

    def distances(self, X: Any) -> np.ndarray:
        """Distance to the intersection for each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self._dim:
            raise DimensionError(f"oracle lives in dimension {self._dim}, got {X.shape[1]}")
        inside = np.ones(len(X), dtype=bool)
        for b in self.bodies:
            # exact membership only: with tangent bodies a loose tolerance
            # would zero out points a visible distance from the intersection
            inside &= np.atleast_1d(b.distance(X)) == 0.0
        out = np.zeros(len(X))
        todo = np.flatnonzero(~inside)
        if todo.size == 0:
            return out
        if self.method == "grid":
            out[todo], _ = _grid_tree(self.bodies, self.bounds, self.resolution).query(X[todo])
            return out
        P, _, conv = cyclic_projections(self.bodies, X[todo], self.tol, self.max_sweeps)
        if not np.all(conv):
            bad = todo[np.flatnonzero(conv == 0)[0]]
            raise NonConvergenceError(
                f"alternating projections did not settle within {self.max_sweeps} sweeps "
                f"from {X[bad].tolist()}", last_iterate=P[np.flatnonzero(conv == 0)[0]])
        out[todo] = np.linalg.norm(X[todo] - P, axis=1)
        return out

    def distance(self, x: Any) -> float:
        return float(self.distances(np.asarray(x, dtype=float)[None, :])[0])

    def to_dict(self) -> dict[str, Any]:
        if self.method == "grid":
            return {"method": "grid", "bounds": [list(b) for b in self.bounds],
                    "resolution": self.resolution}
        return {"method": "alternating_projection", "tol": self.tol,
                "max_sweeps": self.max_sweeps}

    @classmethod
    def from_dict(cls, spec: dict[str, Any], bodies: Sequence[ConvexBody | dict]) -> "IntersectionOracle":
        bodies = tuple(b if isinstance(b, ConvexBody) else body_from_dict(b) for b in bodies)
        method = spec.get("method", "alternating_projection")
        if method == "grid":
            return cls(bodies, "grid", bounds=spec.get("bounds"),
                       resolution=float(spec.get("resolution", 1e-3)))
        return cls(bodies, method, tol=float(spec.get("tol", AP_TOL)),
                   max_sweeps=int(spec.get("max_sweeps", AP_MAX_SWEEPS)))


def distance_to_intersection(oracle: IntersectionOracle, x: Any) -> float:
    return oracle.distance(x)


def union_diameter_balls(bodies: Sequence[ConvexBody]) -> float:
    """Diameter of a union of balls: max over pairs of centre distance plus both radii."""
    from .convex import Ball

    if not all(isinstance(b, Ball) for b in bodies):
        raise TypeError("closed form only for balls")
    best = 0.0
    for a in bodies:
        for b in bodies:
            best = max(best, float(np.linalg.norm(a._c - b._c)) + a.radius + b.radius)
    return best


# ---------------------------------------------------------------------------
# schedule diagnostics


@dataclass(frozen=True)
class SeriesClass:
    label: str  # "divergent", "summable" or "unclassified"
    total: float | None = None  # closed-form sum when summable and known


@dataclass(frozen=True)
class SumReport:
    K: int
    sum_alpha_minus: float
    sum_alpha_plus: float
    sum_alpha_plus_theta: float
    alpha_minus: SeriesClass
    alpha_plus: SeriesClass
    alpha_plus_theta: SeriesClass

    @property
    def convergence_hypotheses(self) -> bool | None:
        """Divergent min-depth sum and summable depth-angle sum, if both are classified."""
        if "unclassified" in (self.alpha_minus.label, self.alpha_plus_theta.label):
            return None
        return self.alpha_minus.label == "divergent" and self.alpha_plus_theta.label == "summable"


def _depth_family(depths: DepthSchedule, which: str) -> tuple[str, float, float]:
    """(family, coefficient, exponent-or-ratio) for the min or max depth sequence."""
    kind = depths.kind
    if kind == "constant":
        return "power", depths.value, 0.0
    if kind == "harmonic":
        return "power", depths.value, 1.0
    if kind == "power":
        return "power", depths.value, depths.power
    if kind == "geometric":
        return "geometric", depths.value, depths.ratio
    if kind == "per_node":
        v = min(depths.values) if which == "min" else max(depths.values)
        return "power", v, 0.0
    return "unclassified", math.nan, math.nan


def _angle_family(angles: AngleSchedule) -> tuple[str, float, float]:
    if angles.kind == "constant":
        return "power", angles.value, 0.0
    if angles.kind == "harmonic":
        return "power", angles.value, 1.0
    if all(v == 0.0 for v in angles.values):
        return "power", 0.0, 0.0
    return "unclassified", math.nan, math.nan


def _classify(fam: tuple[str, float, float]) -> SeriesClass:
    kind, c, q = fam
    if kind == "unclassified":
        return SeriesClass("unclassified")
    if c == 0.0:
        return SeriesClass("summable", 0.0)
    if kind == "geometric":
        return SeriesClass("summable", c / (1.0 - q)) if q < 1 else SeriesClass("divergent")
    if q <= 1:
        return SeriesClass("divergent")
    return SeriesClass("summable", c * float(zeta(q)))


def _classify_product(a: tuple[str, float, float], t: tuple[str, float, float]) -> SeriesClass:
    if a[0] != "unclassified" and a[1] == 0.0 or t[0] != "unclassified" and t[1] == 0.0:
        return SeriesClass("summable", 0.0)
    if "unclassified" in (a[0], t[0]):
        return SeriesClass("unclassified")
    if a[0] == "geometric":
        if a[2] >= 1:
            return _classify(t)
        # geometric times a bounded power sequence
        return SeriesClass("summable", None if t[2] > 0 else a[1] * t[1] / (1.0 - a[2]))
    p = a[2] + t[2]
    if p <= 1:
        return SeriesClass("divergent")
    return SeriesClass("summable", a[1] * t[1] * float(zeta(p)))


def partial_sums(depths: DepthSchedule, angles: AngleSchedule, K: int,
                 n: int | None = None) -> SumReport:
    """Finite sums over ``k < K`` plus a closed-form verdict for the known families."""
    if K < 1:
        raise ValueError("K must be at least 1")
    n = n or depths.width or 1
    amin = np.empty(K)
    amax = np.empty(K)
    for k in range(K):
        a = depths(k, n)
        amin[k], amax[k] = a.min(), a.max()
    theta = np.array([angles(k) for k in range(K)])
    return SumReport(
        K=K,
        sum_alpha_minus=float(math.fsum(amin)),
        sum_alpha_plus=float(math.fsum(amax)),
        sum_alpha_plus_theta=float(math.fsum(amax * theta)),
        alpha_minus=_classify(_depth_family(depths, "min")),
        alpha_plus=_classify(_depth_family(depths, "max")),
        alpha_plus_theta=_classify_product(_depth_family(depths, "max"), _angle_family(angles)),
    )
