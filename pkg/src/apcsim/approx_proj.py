"""Approximate projections: the cone/half-space admissible set and selection policies.

For an exterior point ``v`` of a body ``K`` with exact projection ``p`` the
admissible set is the intersection of

* the cone of directions within angle ``theta`` of ``p - v`` (apex at ``v``), and
* the outer half-space bounded by the supporting hyperplane at ``p``.

Its slice on the hyperplane itself is the *supporting* approximate projection.
Any admissible point is a blend ``(1 - alpha) v + alpha y`` with ``y`` on the
hyperplane slice, which is how the helpers below construct them.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .convex import EPS, ConvexBody

log = logging.getLogger(__name__)

HALF_PI = math.pi / 2


class ContractError(ValueError):
    """Called with a point for which the requested set is undefined."""


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class AngleSchedule:
    """Angle errors theta_k, all bounded by ``cap`` < pi/2.

    kinds: ``constant`` (``value``), ``harmonic`` (``value / (k + 1)``) and
    ``table`` (``values[k]``, last entry repeated past the end).
    """

    kind: str = "constant"
    value: float = 0.0
    values: tuple[float, ...] = ()
    cap: float | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "harmonic", "table"):
            raise ValueError(f"unknown angle schedule kind {self.kind!r}")
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.kind == "table" and not self.values:
            raise ValueError("table angle schedule needs values")
        peak = self.peak()
        if self.cap is None:
            object.__setattr__(self, "cap", peak)
        object.__setattr__(self, "cap", float(self.cap))
        if self.kind == "table":
            low = min(self.values)
        else:
            low = self.value
        if low < 0:
            raise ValueError("angles must be nonnegative")
        if not self.cap < HALF_PI:
            raise ValueError(f"A4: angle cap {self.cap} must be < pi/2")
        if peak > self.cap:
            raise ValueError(f"A4: angle {peak} exceeds cap {self.cap}")

    def peak(self) -> float:
        return max(self.values) if self.kind == "table" else self.value

    def __call__(self, k: int) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "harmonic":
            return self.value / (k + 1)
        return self.values[min(k, len(self.values) - 1)]

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind, "cap": self.cap}
        if self.kind == "table":
            d["values"] = list(self.values)
        else:
            d["value"] = self.value
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "AngleSchedule":
        return cls(kind=d.get("kind", "constant"), value=d.get("value", 0.0),
                   values=tuple(d.get("values", ())), cap=d.get("cap"))


@dataclass(frozen=True)
class DepthSchedule:
    """Blend depths alpha_{i,k} in [0, 1].

    kinds: ``constant`` (``value``), ``harmonic`` (``value / (k + 1)``),
    ``power`` (``value / (k + 1) ** power``), ``geometric``
    (``value * ratio ** k``), ``per_node`` (fixed ``values[i]``) and
    ``table`` (``values[k]`` rows, a row being a scalar or one entry per node;
    the last row repeats past the end).
    """

    kind: str = "constant"
    value: float = 1.0
    power: float = 1.0
    ratio: float = 0.5
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("constant", "harmonic", "power", "geometric", "per_node", "table"):
            raise ValueError(f"unknown depth schedule kind {self.kind!r}")
        vals = self.values
        if self.kind == "table":
            vals = tuple(tuple(float(x) for x in r) if np.ndim(r) else float(r) for r in vals)
        else:
            vals = tuple(float(x) for x in vals)
        object.__setattr__(self, "values", vals)
        if self.kind in ("per_node", "table") and not vals:
            raise ValueError(f"{self.kind} depth schedule needs values")
        flat = np.hstack([np.ravel(r) for r in vals]) if vals else np.array([self.value])
        if self.kind == "geometric" and not 0 <= self.ratio <= 1:
            raise ValueError("geometric ratio must lie in [0, 1]")
        if np.any(flat < 0) or np.any(flat > 1):
            raise ValueError("depths must lie in [0, 1]")

    @property
    def width(self) -> int | None:
        """Number of nodes the schedule is tied to, or None if node-agnostic."""
        if self.kind == "per_node":
            return len(self.values)
        if self.kind == "table":
            widths = {len(r) for r in self.values if isinstance(r, tuple)}
            return widths.pop() if len(widths) == 1 else None
        return None

    def __call__(self, k: int, n: int) -> np.ndarray:
        if self.kind == "constant":
            a = self.value
        elif self.kind == "harmonic":
            a = self.value / (k + 1)
        elif self.kind == "power":
            a = self.value / (k + 1) ** self.power
        elif self.kind == "geometric":
            a = self.value * self.ratio ** k
        elif self.kind == "per_node":
            a = self.values
        else:
            a = self.values[min(k, len(self.values) - 1)]
        out = np.broadcast_to(np.asarray(a, dtype=float), (n,)).copy()
        if np.any(out > 1) or np.any(out < 0):
            raise ValueError(f"depth at step {k} leaves [0, 1]")
        return out

    def minus(self, k: int, n: int) -> float:
        return float(self(k, n).min())

    def plus(self, k: int, n: int) -> float:
        return float(self(k, n).max())

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind}
        if self.kind in ("per_node", "table"):
            d["values"] = [list(r) if isinstance(r, tuple) else r for r in self.values]
        else:
            d["value"] = self.value
        if self.kind == "power":
            d["power"] = self.power
        if self.kind == "geometric":
            d["ratio"] = self.ratio
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "DepthSchedule":
        return cls(kind=d.get("kind", "constant"), value=d.get("value", 1.0),
                   power=d.get("power", 1.0), ratio=d.get("ratio", 0.5),
                   values=tuple(d.get("values", ())))


# ---------------------------------------------------------------------------
# selection policies


def _orthonormal_to(d: np.ndarray, ref: np.ndarray) -> np.ndarray | None:
    """Unit vector along the part of ``ref`` orthogonal to ``d``; None if degenerate."""
    dn = d / np.linalg.norm(d)
    w = ref - (ref @ dn) * dn
    nw = np.linalg.norm(w)
    if nw <= 1e-8 * max(np.linalg.norm(ref), 1.0):
        return None
    return w / nw


class SelectionPolicy:
    """Chooses the off-axis angle and direction of a supporting approximate projection."""

    name = ""

    def angle(self, theta: float, rng: np.random.Generator | None) -> float:
        raise NotImplementedError

    def direction(self, d: np.ndarray, rng: np.random.Generator | None) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name}


class Exact(SelectionPolicy):
    name = "exact"

    def angle(self, theta, rng):
        return 0.0

    def direction(self, d, rng):  # pragma: no cover - never consulted at angle 0
        raise AssertionError("exact policy has no off-axis direction")

    def __eq__(self, other):
        return type(other) is Exact

    def __hash__(self):
        return hash(self.name)


class RandomInCone(SelectionPolicy):
    """Angle uniform in ``[0, theta]``, direction isotropic in the orthogonal complement."""

    name = "random_in_cone"

    def angle(self, theta, rng):
        return float(rng.uniform(0.0, theta))

    def direction(self, d, rng):
        while True:
            u = _orthonormal_to(d, rng.standard_normal(d.size))
            if u is not None:
                return u

    def __eq__(self, other):
        return type(other) is RandomInCone

    def __hash__(self):
        return hash(self.name)


class AdversarialFixedAngle(SelectionPolicy):
    """Always uses the full angle ``theta``.

    The direction is the component of a fixed reference vector (drawn once per
    dimension from ``seed``) orthogonal to the projection direction, so the
    choice depends only on the geometry, never on call order.
    """

    name = "adversarial_fixed_angle"

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self._refs: dict[int, np.ndarray] = {}

    def _reference(self, m: int) -> np.ndarray:
        if m not in self._refs:
            self._refs[m] = np.random.default_rng(self.seed).standard_normal(m)
        return self._refs[m]

    def angle(self, theta, rng):
        return float(theta)

    def direction(self, d, rng):
        u = _orthonormal_to(d, self._reference(d.size))
        if u is None:
            e = np.zeros(d.size)
            e[int(np.argmin(np.abs(d)))] = 1.0
            u = _orthonormal_to(d, e)
        return u

    def to_dict(self):
        return {"name": self.name, "seed": self.seed}

    def __eq__(self, other):
        return isinstance(other, AdversarialFixedAngle) and other.seed == self.seed

    def __hash__(self):
        return hash((self.name, self.seed))


def policy_from_spec(spec: str | dict[str, Any] | SelectionPolicy) -> SelectionPolicy:
    if isinstance(spec, SelectionPolicy):
        return spec
    if isinstance(spec, str):
        spec = {"name": spec}
    name = spec.get("name")
    if name == "exact":
        return Exact()
    if name == "random_in_cone":
        return RandomInCone()
    if name == "adversarial_fixed_angle":
        return AdversarialFixedAngle(spec.get("seed", 0))
    raise ValueError(f"unknown selection policy {name!r}; expected exact, "
                     "random_in_cone or adversarial_fixed_angle")


# ---------------------------------------------------------------------------
# membership predicates


def _exterior(body: ConvexBody, v: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    p = body.project(v)
    d = p - v
    dist = float(np.linalg.norm(d))
    if dist == 0.0:
        raise ContractError("approximate projection sets are defined for exterior points only")
    return p, d, dist


def in_cone(body: ConvexBody, v: Any, z: Any, theta: float, tol: float = EPS) -> bool:
    """True iff ``z`` lies in the angle-``theta`` cone at ``v`` around the projection direction."""
    v = np.asarray(v, dtype=float)
    _, d, dist = _exterior(body, v)
    w = np.asarray(z, dtype=float) - v
    return bool(w @ d >= np.linalg.norm(w) * dist * math.cos(theta) - tol)


def in_upper_halfspace(body: ConvexBody, v: Any, z: Any, tol: float = EPS) -> bool:
    """True iff ``z`` is on the same side of the supporting hyperplane at P(v) as ``v``."""
    v = np.asarray(v, dtype=float)
    p, d, _ = _exterior(body, v)
    nrm = -d
    return bool(nrm @ np.asarray(z, dtype=float) >= nrm @ p - tol)


def on_hyperplane(body: ConvexBody, v: Any, z: Any, tol: float = EPS) -> bool:
    v = np.asarray(v, dtype=float)
    p, d, _ = _exterior(body, v)
    return bool(abs(d @ (np.asarray(z, dtype=float) - p)) <= tol)


# ---------------------------------------------------------------------------
# constructions


def supporting_approx_projection(
    body: ConvexBody,
    v: Any,
    theta: float,
    policy: SelectionPolicy,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """A point of the hyperplane slice: ``P(v) + |v|_K tan(phi) u`` with ``phi <= theta``."""
    if not 0.0 <= theta < HALF_PI:
        raise ValueError(f"angle must lie in [0, pi/2), got {theta}")
    v = np.asarray(v, dtype=float)
    p = body.project(v)
    d = p - v
    dist = math.sqrt(d @ d)
    if dist == 0.0:
        return v.copy()
    phi = policy.angle(theta, rng)
    if phi == 0.0:
        return p
    if v.size == 1:
        log.debug("dimension 1: hyperplane slice is {P(v)}, ignoring angle %g", phi)
        return p
    u = policy.direction(d, rng)
    return p + (dist * math.tan(phi)) * u


def approx_projection(
    body: ConvexBody,
    v: Any,
    theta: float,
    alpha: float,
    policy: SelectionPolicy,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Blend ``(1 - alpha) v + alpha * supporting_approx_projection(...)``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"depth must lie in [0, 1], got {alpha}")
    v = np.asarray(v, dtype=float)
    y = supporting_approx_projection(body, v, theta, policy, rng)
    return (1.0 - alpha) * v + alpha * y


def decompose(body: ConvexBody, v: Any, y: Any) -> tuple[float, np.ndarray]:
    """Recover ``(alpha, hyperplane point)`` from an admissible ``y != v``.

    The hyperplane point is unique: it is where the ray from ``v`` through
    ``y`` meets the supporting hyperplane.
    """
    v = np.asarray(v, dtype=float)
    y = np.asarray(y, dtype=float)
    _, d, dist = _exterior(body, v)
    step = y - v
    alpha = float(step @ d) / dist**2
    if alpha <= 0:
        raise ContractError("y is not an admissible point distinct from v")
    return alpha, v + step / alpha


def theta_sequence(angles: AngleSchedule, K: int) -> np.ndarray:
    return np.array([angles(k) for k in range(K)])


def depth_table(depths: DepthSchedule, K: int, n: int) -> np.ndarray:
    return np.array([depths(k, n) for k in range(K)]).reshape(K, n)


def check_nodes(depths: DepthSchedule, n: int) -> None:
    w = depths.width
    if w is not None and w != n:
        raise ValueError(f"depth schedule is defined for {w} nodes, network has {n}")

