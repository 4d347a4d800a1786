"""Command line harness: ``apcsim run | preset | compare``.

Exit codes: 0 ok, 1 I/O failure, 2 invalid config, 3 divergence that the
config did not expect.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import kernels
from .approx_proj import Exact, depth_table
from .config import ConfigError, ExperimentConfig, load_config
from .engine import run, write_artifacts
from .network import PeriodicSchedule, StaticSchedule
from .presets import PRESET_NAMES, preset

log = logging.getLogger(__name__)

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_DIVERGED = 0, 1, 2, 3
DEFAULT_GRID = "-1.96:0.08:50"


# ---------------------------------------------------------------------------
# run


def run_experiment(config: ExperimentConfig, out_dir: str | Path | None = None) -> tuple[int, dict[str, Any]]:
    """Run ``config``, write ``trace.csv``, ``summary.json`` and ``config.json``; return (exit code, summary)."""
    out = Path(out_dir or config.output_dir or Path("runs") / config.name)
    trace = run(config)
    summary = write_artifacts(trace, config, out)
    config.save(out / "config.json")
    code = EXIT_DIVERGED if trace.diverged and not config.expect_divergence else EXIT_OK
    return code, summary


# ---------------------------------------------------------------------------
# compare


@dataclass
class CompareRow:
    initial: list[float]
    h_a: float
    h_b: float

    @property
    def diff(self) -> float:
        return self.h_a - self.h_b

    @property
    def winner(self) -> str:
        # strict inequality; exact equality is a tie
        if self.h_a < self.h_b:
            return "a"
        if self.h_b < self.h_a:
            return "b"
        return "tie"


@dataclass
class CompareReport:
    name_a: str
    name_b: str
    horizon: int
    metric: str = "h_at_final"
    rows: list[CompareRow] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        out = {"a": 0, "b": 0, "tie": 0}
        for r in self.rows:
            out[r.winner] += 1
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "a": self.name_a, "b": self.name_b, "metric": self.metric, "horizon": self.horizon,
            "counts": self.counts(),
            "rows": [{"initial": r.initial, "h_a": r.h_a, "h_b": r.h_b, "diff": r.diff,
                      "winner": r.winner} for r in self.rows],
        }

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        m = len(self.rows[0].initial) if self.rows else 0
        with path.open("w", newline="", encoding="ascii") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"x_{d}" for d in range(m)] + ["h_a", "h_b", "diff", "winner"])
            for r in self.rows:
                w.writerow([repr(float(c)) for c in r.initial]
                           + [repr(r.h_a), repr(r.h_b), repr(r.diff), r.winner])
        return path


def parse_grid(spec: str) -> np.ndarray:
    """``START:STEP:COUNT`` -> the ``COUNT`` axis values ``START + i * STEP``."""
    try:
        start, step, count = spec.split(":")
        start, step, count = float(start), float(step), int(count)
    except ValueError:
        raise ConfigError([f"grid spec {spec!r} is not START:STEP:COUNT"]) from None
    if count < 1 or not step > 0:
        raise ConfigError(["grid needs COUNT >= 1 and STEP > 0"])
    return start + step * np.arange(count)


def check_comparable(a: ExperimentConfig, b: ExperimentConfig) -> None:
    problems = []
    if a.bodies != b.bodies:
        problems.append("bodies differ")
    if a.schedule.to_dict() != b.schedule.to_dict():
        problems.append("graphs differ")
    if a.horizon != b.horizon:
        problems.append(f"horizons differ ({a.horizon} vs {b.horizon})")
    if a.raw["initial"] != b.raw["initial"] or (
            a.raw["initial"].get("kind") == "uniform_box" and a.seed != b.seed):
        problems.append("initial conditions differ")
    if problems:
        raise ConfigError([f"configs are not comparable: {p}" for p in problems])


def _blend_eligible(cfg: ExperimentConfig) -> bool:
    zero_angle = cfg.angles.kind != "harmonic" and cfg.angles.peak() == 0.0
    return (isinstance(cfg.policy, Exact) or zero_angle) and kernels.pack_bodies(cfg.bodies) is not None


def _final_h_batch(cfg: ExperimentConfig, starts: np.ndarray, jobs: int) -> np.ndarray:
    """h(horizon) for each shared initial point in ``starts`` (B, m)."""
    n, K = cfg.n, cfg.horizon
    oracle = cfg.build_oracle()
    if _blend_eligible(cfg):
        packed = kernels.pack_bodies(cfg.bodies)
        if isinstance(cfg.schedule, StaticSchedule):
            W = cfg.schedule.graph.weights[None]
        elif isinstance(cfg.schedule, PeriodicSchedule):
            W = np.stack([g.weights for g in cfg.schedule.graphs])
        else:
            W = np.stack([cfg.schedule.weights_at(k).weights for k in range(K)]) if K else np.eye(n)[None]
        W = np.ascontiguousarray(W)
        alphas = np.ascontiguousarray(depth_table(cfg.depths, K, n))
        X0 = np.repeat(starts[:, None, :], n, axis=1)
        chunks = np.array_split(np.arange(len(starts)), max(1, min(jobs, len(starts))))
        # the compiled kernel releases the GIL, so threads run in parallel
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(
                lambda idx: kernels.blend_consensus_final(*packed, W, alphas, X0[idx]), chunks))
        XK = np.concatenate(parts)
        h = oracle.distances(XK.reshape(-1, XK.shape[-1])).reshape(len(starts), n).max(axis=1)
        return h
    out = np.empty(len(starts))
    for i, p in enumerate(starts):
        c = cfg.replace(initial={"kind": "shared", "point": p.tolist()}, record_stride=max(K, 1))
        out[i] = run(c, oracle=oracle).final_h
    return out


def compare(a: ExperimentConfig, b: ExperimentConfig, grid: str | None = None,
            jobs: int | None = None) -> CompareReport:
    """Final-``h`` race between two comparable configs.

    Without ``grid`` the configs' own initial condition is used; with it, every
    node starts at each point of the square grid ``axis x axis``.
    """
    check_comparable(a, b)
    report = CompareReport(a.name, b.name, a.horizon)
    jobs = jobs or os.cpu_count() or 1
    if grid is None:
        with ThreadPoolExecutor(max_workers=2) as pool:
            ta, tb = pool.map(lambda c: run(c.replace(record_stride=max(c.horizon, 1))), (a, b))
        x0 = a.initial_points()
        init = x0[0].tolist() if np.all(x0 == x0[0]) else x0.tolist()
        report.rows.append(CompareRow(init, ta.final_h, tb.final_h))
        return report
    if a.dimension != 2:
        raise ConfigError(["grid comparison needs dimension 2"])
    axis = parse_grid(grid)
    gx, gy = np.meshgrid(axis, axis)
    starts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    ha = _final_h_batch(a, starts, jobs)
    hb = _final_h_batch(b, starts, jobs)
    report.rows = [CompareRow(p.tolist(), float(x), float(y)) for p, x, y in zip(starts, ha, hb)]
    return report


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="apcsim", description="Approximate projected consensus experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", type=Path)

    s = sub.add_parser("preset", help="run a named preset")
    s.add_argument("name", help="one of: " + ", ".join(PRESET_NAMES))
    s.add_argument("--out", type=Path)

    c = sub.add_parser("compare", help="compare final h of two configs")
    c.add_argument("--a", required=True, type=Path)
    c.add_argument("--b", required=True, type=Path)
    c.add_argument("--grid", nargs="?", const=DEFAULT_GRID, default=None, metavar="START:STEP:COUNT",
                   help=f"sweep shared initial points over a square grid (default {DEFAULT_GRID})")
    c.add_argument("--out", type=Path)
    c.add_argument("--jobs", type=int)
    return p


def _print_summary(summary: dict[str, Any], out: Path) -> None:
    print(f"{summary['name']}: final h={summary['final_h']:.6g} "
          f"diameter={summary['final_diameter']:.6g} diverged={summary['diverged']} "
          f"({summary['wall_time']:.2f}s) -> {out}")


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg = cfg.replace(seed=args.seed)
            out = args.out or Path(cfg.output_dir or Path("runs") / cfg.name)
            code, summary = run_experiment(cfg, out)
            _print_summary(summary, out)
            return code
        if args.command == "preset":
            cfg = preset(args.name)
            out = args.out or Path("runs") / cfg.name
            code, summary = run_experiment(cfg, out)
            _print_summary(summary, out)
            return code
        a, b = load_config(args.a), load_config(args.b)
        report = compare(a, b, grid=args.grid, jobs=args.jobs)
        counts = report.counts()
        if len(report.rows) == 1:
            r = report.rows[0]
            print(f"h_a={r.h_a!r} h_b={r.h_b!r} diff={r.diff!r} winner={r.winner}")
        else:
            print(f"{len(report.rows)} initial points: a wins {counts['a']}, "
                  f"b wins {counts['b']}, ties {counts['tie']}")
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "compare.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
            report.write_csv(args.out / "winner_map.csv")
        return EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc.strerror or exc}: {exc.filename or ''}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
