"""Closed convex bodies with exact Euclidean projection.

Every body works on single points of shape ``(m,)`` and on stacks of points
of shape ``(N, m)``; projections act on the last axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, ClassVar

import numpy as np

from . import kernels

#: Global geometric tolerance used for membership and equality checks.
EPS = 1e-9

DYKSTRA_TOL = 1e-12
DYKSTRA_MAX_SWEEPS = 100_000

# Kind codes shared with the compiled kernels.
KIND_BALL = 0
KIND_HALFSPACE = 1
KIND_BOX = 2
KIND_SINGLETON = 3


class DimensionError(ValueError):
    """Point and body live in different dimensions."""


class NonConvergenceError(RuntimeError):
    """An iterative projection did not settle within its sweep budget."""

    def __init__(self, message: str, last_iterate: np.ndarray | None = None):
        super().__init__(message)
        self.last_iterate = last_iterate


def as_point(v: Any, m: int | None = None) -> np.ndarray:
    """Coerce ``v`` to a finite float vector, optionally of length ``m``."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"a point must be a non-empty 1-D vector, got shape {arr.shape}")
    if m is not None and arr.size != m:
        raise DimensionError(f"expected dimension {m}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


def _tuple(v: Any) -> tuple[float, ...]:
    return tuple(float(c) for c in as_point(v))


class ConvexBody:
    """Base class. Subclasses implement ``_project`` on ``(N, m)`` arrays."""

    shape: ClassVar[str] = ""

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def _check(self, x: Any) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0 or arr.shape[-1] != self.dim:
            raise DimensionError(
                f"{self.shape} lives in dimension {self.dim}, got array of shape {arr.shape}"
            )
        return arr

    def project(self, x: Any) -> np.ndarray:
        arr = self._check(x)
        flat = arr.reshape(-1, self.dim)
        return self._project(flat).reshape(arr.shape)

    def distance(self, x: Any) -> np.ndarray | float:
        arr = self._check(x)
        d = np.linalg.norm(arr - self.project(arr), axis=-1)
        return float(d) if arr.ndim == 1 else d

    def contains(self, x: Any, tol: float = EPS) -> bool | np.ndarray:
        d = self.distance(x)
        return bool(d <= tol) if np.ndim(d) == 0 else d <= tol

    def _project(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def pack(self) -> tuple[int, np.ndarray] | None:
        """Kind code and flat parameter row for the compiled kernels, if supported."""
        return None

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class Ball(ConvexBody):
    center: tuple[float, ...]
    radius: float
    _c: np.ndarray = field(init=False, repr=False, compare=False)

    shape: ClassVar[str] = "ball"

    def __post_init__(self):
        object.__setattr__(self, "center", _tuple(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "_c", np.array(self.center))

    @property
    def dim(self) -> int:
        return len(self.center)

    def _project(self, X):
        d = X - self._c
        n = np.sqrt(np.einsum("ij,ij->i", d, d))
        out = X.copy()
        far = n > self.radius
        if np.any(far):
            out[far] = self._c + d[far] * (self.radius / n[far])[:, None]
        return out

    def distance(self, x):
        arr = self._check(x)
        d = np.maximum(np.linalg.norm(arr - self._c, axis=-1) - self.radius, 0.0)
        return float(d) if arr.ndim == 1 else d

    def pack(self):
        return KIND_BALL, np.array(self.center + (self.radius,))

    def to_dict(self):
        return {"shape": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class HalfSpace(ConvexBody):
    """The set ``{z : <normal, z> <= offset}``."""

    normal: tuple[float, ...]
    offset: float
    _a: np.ndarray = field(init=False, repr=False, compare=False)
    _a2: float = field(init=False, repr=False, compare=False)

    shape: ClassVar[str] = "halfspace"

    def __post_init__(self):
        object.__setattr__(self, "normal", _tuple(self.normal))
        object.__setattr__(self, "offset", float(self.offset))
        a = np.array(self.normal)
        a2 = float(a @ a)
        if not a2 > 0:
            raise ValueError("half-space normal must be nonzero")
        if not math.isfinite(self.offset):
            raise ValueError("half-space offset must be finite")
        object.__setattr__(self, "_a", a)
        object.__setattr__(self, "_a2", a2)

    @property
    def dim(self) -> int:
        return len(self.normal)

    def _project(self, X):
        t = X @ self._a - self.offset
        out = X.copy()
        viol = t > 0
        if np.any(viol):
            out[viol] = X[viol] - (t[viol] / self._a2)[:, None] * self._a
        return out

    def distance(self, x):
        arr = self._check(x)
        d = np.maximum(arr @ self._a - self.offset, 0.0) / math.sqrt(self._a2)
        return float(d) if arr.ndim == 1 else d

    def pack(self):
        return KIND_HALFSPACE, np.array(self.normal + (self.offset,))

    def to_dict(self):
        return {"shape": "halfspace", "normal": list(self.normal), "offset": self.offset}


@dataclass(frozen=True)
class Box(ConvexBody):
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    _lo: np.ndarray = field(init=False, repr=False, compare=False)
    _hi: np.ndarray = field(init=False, repr=False, compare=False)

    shape: ClassVar[str] = "box"

    def __post_init__(self):
        object.__setattr__(self, "lower", _tuple(self.lower))
        object.__setattr__(self, "upper", _tuple(self.upper))
        if len(self.lower) != len(self.upper):
            raise DimensionError("box bounds differ in dimension")
        lo, hi = np.array(self.lower), np.array(self.upper)
        if np.any(lo > hi):
            raise ValueError("box requires lower <= upper componentwise")
        object.__setattr__(self, "_lo", lo)
        object.__setattr__(self, "_hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def _project(self, X):
        return np.clip(X, self._lo, self._hi)

    def pack(self):
        return KIND_BOX, np.array(self.lower + self.upper)

    def to_dict(self):
        return {"shape": "box", "lower": list(self.lower), "upper": list(self.upper)}


@dataclass(frozen=True)
class Singleton(ConvexBody):
    point: tuple[float, ...]
    _p: np.ndarray = field(init=False, repr=False, compare=False)

    shape: ClassVar[str] = "singleton"

    def __post_init__(self):
        object.__setattr__(self, "point", _tuple(self.point))
        object.__setattr__(self, "_p", np.array(self.point))

    @property
    def dim(self) -> int:
        return len(self.point)

    def _project(self, X):
        return np.broadcast_to(self._p, X.shape).copy()

    def pack(self):
        return KIND_SINGLETON, np.array(self.point)

    def to_dict(self):
        return {"shape": "singleton", "point": list(self.point)}


@dataclass(frozen=True)
class Polyhedron(ConvexBody):
    """Finite intersection of half-spaces, projected with Dykstra's algorithm.

    The result is exact up to the stopping tolerance: iteration ends once a
    full sweep moves every point by less than ``DYKSTRA_TOL`` and the points
    satisfy every face. An empty feasible region exhausts ``max_sweeps`` and
    raises :class:`NonConvergenceError`.
    """

    halfspaces: tuple[HalfSpace, ...]
    max_sweeps: int = DYKSTRA_MAX_SWEEPS

    shape: ClassVar[str] = "polyhedron"

    def __post_init__(self):
        hs = tuple(self.halfspaces)
        if not hs:
            raise ValueError("polyhedron needs at least one half-space")
        if any(not isinstance(h, HalfSpace) for h in hs):
            raise TypeError("polyhedron faces must be HalfSpace instances")
        if len({h.dim for h in hs}) != 1:
            raise DimensionError("polyhedron faces differ in dimension")
        object.__setattr__(self, "halfspaces", hs)

    @property
    def dim(self) -> int:
        return self.halfspaces[0].dim

    def _project(self, X):
        A = np.array([h.normal for h in self.halfspaces])
        b = np.array([h.offset for h in self.halfspaces])
        y, _, conv = kernels.dykstra_batch(A, b, X, DYKSTRA_TOL, EPS, self.max_sweeps)
        if conv.all():
            return y
        y = y[np.argmin(conv)]
        raise NonConvergenceError(
            f"Dykstra projection did not settle after {self.max_sweeps} sweeps "
            "(feasible region may be empty)",
            last_iterate=y,
        )

    def to_dict(self):
        return {"shape": "polyhedron", "halfspaces": [h.to_dict() for h in self.halfspaces]}


def project(body: ConvexBody, v: Any) -> np.ndarray:
    """Nearest point of ``body`` to ``v``."""
    return body.project(v)


def distance(body: ConvexBody, v: Any):
    """Euclidean distance from ``v`` to ``body``."""
    return body.distance(v)


def contains(body: ConvexBody, v: Any, tol: float = EPS):
    return body.contains(v, tol)


_SHAPES = {"ball", "halfspace", "box", "singleton", "polyhedron"}


def body_from_dict(spec: dict[str, Any]) -> ConvexBody:
    """Build a body from its config description, e.g. ``{"shape": "ball", ...}``."""
    if not isinstance(spec, dict) or "shape" not in spec:
        raise ValueError("body description needs a 'shape' field")
    shape = spec["shape"]
    try:
        if shape == "ball":
            return Ball(spec["center"], spec["radius"])
        if shape == "halfspace":
            return HalfSpace(spec["normal"], spec["offset"])
        if shape == "box":
            return Box(spec["lower"], spec["upper"])
        if shape == "singleton":
            return Singleton(spec["point"])
        if shape == "polyhedron":
            return Polyhedron(tuple(body_from_dict({"shape": "halfspace", **h})
                                    for h in spec["halfspaces"]))
    except KeyError as exc:
        raise ValueError(f"{shape} description is missing field {exc}") from None
    raise ValueError(f"unknown shape {shape!r}; expected one of {sorted(_SHAPES)}")
