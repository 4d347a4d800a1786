"""Experiment configuration: JSON schema, validation and construction.

Example (the three-disk setup)::

    {
      "schema": 1,
      "name": "three_disks",
      "dimension": 2,
      "bodies": [{"shape": "ball", "center": [1, 0], "radius": 1}, ...],
      "graph": {"kind": "static", "weights": [[0.5, 0.25, 0.25], ...]},
      "policy": "exact",
      "theta": {"kind": "constant", "value": 0.0},
      "alpha": {"kind": "constant", "value": 0.5},
      "initial": {"kind": "shared", "point": [1.8, 0.8]},
      "horizon": 2000,
      "seed": 0,
      "record_stride": 1,
      "oracle": {"method": "grid", "bounds": [[-2, 2], [-2, 2]], "resolution": 0.001}
    }

Validation failures name the violated assumption: ``A1`` (body shapes),
``A2`` (weights) or ``A4`` (angle cap).
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .approx_proj import AngleSchedule, DepthSchedule, SelectionPolicy, check_nodes, policy_from_spec
from .convex import ConvexBody, body_from_dict
from .network import GraphError, GraphSchedule, schedule_from_dict
from .oracle import IntersectionOracle

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """A config could not be parsed or broke one or more assumptions."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid experiment config:\n  " + "\n  ".join(self.problems))


@dataclass
class ExperimentConfig:
    raw: dict[str, Any]
    name: str
    dimension: int
    bodies: tuple[ConvexBody, ...]
    schedule: GraphSchedule
    angles: AngleSchedule
    depths: DepthSchedule
    policy: SelectionPolicy
    horizon: int
    seed: int
    record_stride: int
    expect_divergence: bool
    output_dir: str | None

    @property
    def n(self) -> int:
        return len(self.bodies)

    def initial_points(self) -> np.ndarray:
        init = self.raw["initial"]
        kind = init.get("kind", "shared")
        if kind == "shared":
            return np.tile(np.asarray(init["point"], dtype=float), (self.n, 1))
        if kind == "points":
            return np.array(init["points"], dtype=float)
        lo = np.asarray(init["lower"], dtype=float)
        hi = np.asarray(init["upper"], dtype=float)
        rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(2**31,)))
        return rng.uniform(lo, hi, size=(self.n, self.dimension))

    def build_oracle(self) -> IntersectionOracle:
        return IntersectionOracle.from_dict(self.raw.get("oracle", {}), self.bodies)

    def to_dict(self) -> dict[str, Any]:
        return copy.deepcopy(self.raw)

    def replace(self, **changes: Any) -> "ExperimentConfig":
        """A new validated config with top-level raw fields replaced."""
        raw = self.to_dict()
        raw.update(copy.deepcopy(changes))
        return from_dict(raw)

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.raw, indent=2) + "\n")
        return path


def _initial_problems(init: Any, n: int, m: int) -> list[str]:
    if not isinstance(init, dict):
        return ["field 'initial': expected an object"]
    kind = init.get("kind", "shared")
    try:
        if kind == "shared":
            p = np.asarray(init["point"], dtype=float)
            if p.shape != (m,):
                return [f"field 'initial.point': expected {m} coordinates"]
        elif kind == "points":
            p = np.asarray(init["points"], dtype=float)
            if p.shape != (n, m):
                return [f"field 'initial.points': expected shape ({n}, {m}), got {p.shape}"]
        elif kind == "uniform_box":
            lo = np.asarray(init["lower"], dtype=float)
            hi = np.asarray(init["upper"], dtype=float)
            if lo.shape != (m,) or hi.shape != (m,) or np.any(lo > hi):
                return ["field 'initial': uniform_box needs lower <= upper of length m"]
            p = np.concatenate([lo, hi])
        else:
            return [f"field 'initial.kind': unknown kind {kind!r}"]
    except (KeyError, TypeError, ValueError) as exc:
        return [f"field 'initial': {exc}"]
    if not np.all(np.isfinite(p)):
        return ["field 'initial': coordinates must be finite"]
    return []


def from_dict(raw: dict[str, Any]) -> ExperimentConfig:
    """Validate ``raw`` and build the config, collecting every violation before raising."""
    if not isinstance(raw, dict):
        raise ConfigError(["top level: expected a JSON object"])
    problems: list[str] = []
    schema = raw.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        problems.append(f"field 'schema': unsupported version {schema!r}")
    for key in ("bodies", "graph", "initial", "horizon"):
        if key not in raw:
            problems.append(f"field '{key}': missing")
    if problems:
        raise ConfigError(problems)

    m = raw.get("dimension")
    bodies: list[ConvexBody] = []
    for i, spec in enumerate(raw["bodies"]):
        try:
            bodies.append(body_from_dict(spec))
        except (ValueError, TypeError) as exc:
            problems.append(f"A1: field 'bodies[{i}]': {exc}")
    if not raw["bodies"]:
        problems.append("A1: field 'bodies': at least one body is required")
    if bodies:
        m = m if m is not None else bodies[0].dim
        for i, b in enumerate(bodies):
            if b.dim != m:
                problems.append(f"A1: field 'bodies[{i}]': dimension {b.dim}, expected {m}")

    schedule = None
    try:
        schedule = schedule_from_dict(raw["graph"])
    except (GraphError, KeyError, TypeError) as exc:
        problems.append(f"A2: field 'graph': {exc}")
    if schedule is not None and schedule.n != len(raw["bodies"]):
        problems.append(f"field 'graph': {schedule.n} nodes but {len(raw['bodies'])} bodies")

    angles = depths = policy = None
    try:
        angles = AngleSchedule.from_dict(raw.get("theta", {"kind": "constant", "value": 0.0}))
    except (ValueError, TypeError) as exc:
        msg = str(exc)
        problems.append(msg if msg.startswith("A4") else f"A4: field 'theta': {msg}")
    try:
        depths = DepthSchedule.from_dict(raw.get("alpha", {"kind": "constant", "value": 1.0}))
        check_nodes(depths, len(raw["bodies"]))
    except (ValueError, TypeError) as exc:
        problems.append(f"field 'alpha': {exc}")
    try:
        policy = policy_from_spec(raw.get("policy", "exact"))
    except (ValueError, TypeError, AttributeError) as exc:
        problems.append(f"field 'policy': {exc}")

    horizon = raw["horizon"]
    if not isinstance(horizon, int) or horizon < 0:
        problems.append("field 'horizon': expected a nonnegative integer")
    stride = raw.get("record_stride", 1)
    if not isinstance(stride, int) or stride < 1:
        problems.append("field 'record_stride': expected a positive integer")
    if m is not None:
        problems += _initial_problems(raw["initial"], len(raw["bodies"]), m)
    if not problems:
        try:
            IntersectionOracle.from_dict(raw.get("oracle", {}), bodies)
        except (ValueError, TypeError) as exc:
            problems.append(f"field 'oracle': {exc}")
    if problems:
        raise ConfigError(problems)

    return ExperimentConfig(
        raw=copy.deepcopy(raw),
        name=str(raw.get("name", "experiment")),
        dimension=int(m),
        bodies=tuple(bodies),
        schedule=schedule,
        angles=angles,
        depths=depths,
        policy=policy,
        horizon=horizon,
        seed=int(raw.get("seed", 0)),
        record_stride=stride,
        expect_divergence=bool(raw.get("expect_divergence", False)),
        output_dir=raw.get("output_dir"),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from None
    return from_dict(raw)
