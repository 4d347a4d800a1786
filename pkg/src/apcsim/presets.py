"""Named, fully specified experiment configs.

The three-disk geometry: unit disks centred at (1, 0), (-1, 0) and (0, -1).
They touch pairwise only at the origin, so the common intersection is the
single point (0, 0) and the union has diameter 4.
"""
from __future__ import annotations

import copy
import math
from typing import Any

from .config import SCHEMA_VERSION, ConfigError, ExperimentConfig, from_dict

DISK_CENTERS = ((1.0, 0.0), (-1.0, 0.0), (0.0, -1.0))
DISK_WEIGHTS = [[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]]
UNION_DIAMETER = 4.0
GRID_ORACLE = {"method": "grid", "bounds": [[-2.0, 2.0], [-2.0, 2.0]], "resolution": 1e-3}
AP_ORACLE = {"method": "alternating_projection"}

# Pinned by a one-off calibration run (see tests/test_acceptance.py).
THM1_HORIZON = 20_000


def _disks() -> list[dict[str, Any]]:
    return [{"shape": "ball", "center": list(c), "radius": 1.0} for c in DISK_CENTERS]


def _base(name: str, **fields: Any) -> dict[str, Any]:
    raw = {
        "schema": SCHEMA_VERSION,
        "name": name,
        "dimension": 2,
        "policy": "exact",
        "theta": {"kind": "constant", "value": 0.0},
        "alpha": {"kind": "constant", "value": 1.0},
        "seed": 0,
        "record_stride": 1,
        "oracle": AP_ORACLE,
        "expect_divergence": False,
    }
    raw.update(fields)
    return raw


_PRESETS: dict[str, dict[str, Any]] = {
    "three_disks": _base(
        "three_disks",
        bodies=_disks(),
        graph={"kind": "static", "weights": DISK_WEIGHTS},
        alpha={"kind": "constant", "value": 0.5},
        initial={"kind": "shared", "point": [1.8, 0.8]},
        horizon=2000,
        oracle=GRID_ORACLE,
    ),
    # the same run with exact projections (the plain projected consensus baseline)
    "three_disks_exact": _base(
        "three_disks_exact",
        bodies=_disks(),
        graph={"kind": "static", "weights": DISK_WEIGHTS},
        initial={"kind": "shared", "point": [1.8, 0.8]},
        horizon=2000,
        oracle=GRID_ORACLE,
    ),
    # summable depths 2^-(k+2): nodes agree but stall away from the intersection
    "thm2_nonconvergence": _base(
        "thm2_nonconvergence",
        bodies=_disks(),
        graph={"kind": "static", "weights": DISK_WEIGHTS},
        alpha={"kind": "geometric", "value": 0.25, "ratio": 0.5},
        initial={"kind": "shared", "point": [6.0, 6.0]},
        horizon=200,
        oracle=GRID_ORACLE,
    ),
    # distance 3 from the unit ball; the worst-case pi/4 error still converges
    "prop2_ball": _base(
        "prop2_ball",
        bodies=[{"shape": "ball", "center": [0.0, 0.0], "radius": 1.0}],
        graph={"kind": "static", "weights": [[1.0]]},
        policy={"name": "adversarial_fixed_angle", "seed": 0},
        theta={"kind": "constant", "value": math.pi / 4},
        initial={"kind": "shared", "point": [4.0, 0.0]},
        horizon=100,
    ),
    # a single-point target: the pi/4 error keeps the distance frozen
    "prop2_singleton": _base(
        "prop2_singleton",
        bodies=[{"shape": "singleton", "point": [0.0, 0.0]}],
        graph={"kind": "static", "weights": [[1.0]]},
        policy={"name": "adversarial_fixed_angle", "seed": 0},
        theta={"kind": "constant", "value": math.pi / 4},
        initial={"kind": "shared", "point": [3.0, 0.0]},
        horizon=100,
    ),
    # pi/3 error from distance 5 > 2/(tan(pi/3) - 1): the state blows up
    "prop3_diverge": _base(
        "prop3_diverge",
        bodies=[{"shape": "ball", "center": [0.0, 0.0], "radius": 1.0}],
        graph={"kind": "static", "weights": [[1.0]]},
        policy={"name": "adversarial_fixed_angle", "seed": 0},
        theta={"kind": "constant", "value": math.pi / 3},
        initial={"kind": "shared", "point": [6.0, 0.0]},
        horizon=100,
        expect_divergence=True,
    ),
    "thm1_harmonic": _base(
        "thm1_harmonic",
        bodies=_disks(),
        graph={"kind": "random_ujsc", "n": 3, "T": 2, "eta": 0.1, "seed": 0},
        policy="random_in_cone",
        theta={"kind": "harmonic", "value": 1.0, "cap": 1.0},
        alpha={"kind": "harmonic", "value": 1.0},
        initial={"kind": "shared", "point": [1.8, 0.8]},
        horizon=THM1_HORIZON,
        record_stride=100,
        oracle=GRID_ORACLE,
    ),
    # constant pi/8 error under a random jointly connected schedule: bounded, not convergent
    "prop1_bounded": _base(
        "prop1_bounded",
        bodies=_disks(),
        graph={"kind": "random_ujsc", "n": 3, "T": 2, "eta": 0.1, "seed": 0},
        policy="random_in_cone",
        theta={"kind": "constant", "value": math.pi / 8},
        initial={"kind": "uniform_box", "lower": [-70.0, -70.0], "upper": [70.0, 70.0]},
        horizon=500,
        oracle=GRID_ORACLE,
    ),
}

PRESET_NAMES = tuple(_PRESETS)


def preset_dict(name: str) -> dict[str, Any]:
    try:
        return copy.deepcopy(_PRESETS[name])
    except KeyError:
        raise ConfigError([f"unknown preset {name!r}; valid presets: {', '.join(PRESET_NAMES)}"]) from None


def preset(name: str, **overrides: Any) -> ExperimentConfig:
    """Build preset ``name``; keyword arguments replace top-level config fields."""
    raw = preset_dict(name)
    raw.update(copy.deepcopy(overrides))
    return from_dict(raw)
