"""Command-line front end: single runs, parameter sweeps and oracle comparison."""

from __future__ import annotations

import argparse
import csv
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import tomli_w

from .baselines import OracleTooLarge, PolicyId
from .profiles import ProfileError, default_config_text, parse_document
from .sim import (
    SimConfig,
    SimReport,
    compare_with_oracle,
    load_sim_config,
    random_instance,
    run,
    write_report_csv,
    write_summary,
)

AXES = ("bandwidth", "frame_rate", "upload_delay", "alpha")
SWEEP_COLUMNS = ["axis_value", "policy", "avg_accuracy", "achieved_fps", "utility", "miss_count"]
GAP_COLUMNS = [
    "instance", "n_frames", "bandwidth_bps", "frame_rate_fps", "rtt_delay_ms",
    "max_accuracy", "optimal_accuracy", "accuracy_gap", "max_utility", "optimal_utility", "utility_gap",
]
NEGATIVE_GAP_TOL = 1e-9


class UsageError(Exception):
    """Bad input; reported on stderr with exit status 2."""


def _read_config(path: str) -> tuple[str, Path]:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config not found: {path}")
    return p.read_text(), p.parent


def _load(path: str, args, **overrides) -> SimConfig:
    text, base_dir = _read_config(path)
    try:
        config = load_sim_config(text, base_dir, grid_ms=args.grid_ms, **overrides)
    except (ProfileError, ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    if args.seed is not None:
        config = config.with_(source=replace(config.source, rng_seed=args.seed))
    return config


def apply_axis(config: SimConfig, axis: str, value: float) -> SimConfig:
    """Set one sweep axis. Bandwidth values are in Mbps, upload delay in ms."""
    if axis == "bandwidth":
        return config.with_(env=config.env.with_(bandwidth_bps=value * 1e6))
    if axis == "frame_rate":
        return config.with_(env=config.env.with_(frame_rate_fps=value))
    if axis == "upload_delay":
        return config.with_(env=config.env.with_(rtt_delay_ms=value))
    if axis == "alpha":
        return config.with_(alpha=value)
    raise ValueError(f"unknown axis {axis!r}; valid axes: {', '.join(AXES)}")


# -- run ------------------------------------------------------------------------


def summary_line(policy: PolicyId, report: SimReport) -> str:
    return (
        f"{policy.value}: avg_accuracy={report.avg_accuracy:.4f} achieved_fps={report.achieved_fps:.3f} "
        f"utility={report.utility:.3f} miss_count={report.miss_count}"
    )


def cmd_run(args) -> int:
    config = _load(args.config, args, policy=args.policy)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        report = run(config)
    except OracleTooLarge as exc:
        raise UsageError(str(exc)) from None
    write_report_csv(report, out / "report.csv")
    write_summary(report, out / "summary.json", {"policy": config.policy.value, "alpha": config.alpha})
    print(summary_line(config.policy, report))
    return 0


# -- sweep ----------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    base: SimConfig
    axis: str
    values: tuple[float, ...]
    policies: tuple[PolicyId, ...]
    nested_axis: str | None = None
    nested_values: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        for name, vals in ((self.axis, self.values), (self.nested_axis, self.nested_values)):
            if name is None:
                continue
            if name not in AXES:
                raise ValueError(f"unknown axis {name!r}; valid axes: {', '.join(AXES)}")
            if not vals:
                raise ValueError(f"axis {name!r}: values list is empty")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"axis {name!r}: values must be strictly increasing")
        if self.nested_axis == self.axis:
            raise ValueError("nested axis must differ from the main axis")
        if not self.policies:
            raise ValueError("policies list is empty")


def load_sweep(text: str, base_dir: Path, grid_ms: float | None = None, seed: int | None = None) -> SweepSpec:
    """Parse a sweep document.

    ``config`` names a profile file (relative to the sweep file; the built-in
    ResNet-50 / SqueezeNet profile when absent). ``env``, ``source`` and ``sim`` tables in
    the sweep document override the matching tables of that profile.
    """
    doc = parse_document(text)
    if "config" in doc:
        cfg_path = base_dir / doc["config"]
        if not cfg_path.is_file():
            raise UsageError(f"config not found: {cfg_path}")
        cfg_doc = parse_document(cfg_path.read_text())
        cfg_dir = cfg_path.parent
    else:
        cfg_doc = parse_document(default_config_text())
        cfg_dir = base_dir
    for table in ("env", "source", "sim"):
        cfg_doc.setdefault(table, {}).update(doc.get(table, {}))
    if seed is not None:
        cfg_doc["source"]["rng_seed"] = seed
    base = load_sim_config(tomli_w.dumps(cfg_doc), cfg_dir, grid_ms=grid_ms)
    try:
        policies = tuple(PolicyId.parse(p) for p in doc.get("policies", []))
        nested = doc.get("nested", {})
        return SweepSpec(
            base=base,
            axis=str(doc["axis"]),
            values=tuple(float(v) for v in doc.get("values", [])),
            policies=policies,
            nested_axis=nested.get("axis"),
            nested_values=tuple(float(v) for v in nested.get("values", [])),
        )
    except KeyError as exc:
        raise ProfileError(f"sweep: missing field {exc}") from None


def _fmt(x: float) -> str:
    return repr(float(x))


def _sweep_point(job: tuple[SimConfig, float, str | None]) -> list[str]:
    config, value, report_path = job
    report = run(config)
    if report_path:
        write_report_csv(report, report_path)
    row = [_fmt(value), config.policy.value, _fmt(report.avg_accuracy), _fmt(report.achieved_fps),
           _fmt(report.utility), str(report.miss_count)]
    return row


def sweep_jobs(spec: SweepSpec, reports_dir: Path | None = None) -> dict[str, list]:
    """Jobs grouped by output file name, each list in (axis_value, policy) order."""
    outer = [(None, spec.base)] if spec.nested_axis is None else [
        (v, apply_axis(spec.base, spec.nested_axis, v)) for v in spec.nested_values
    ]
    groups: dict[str, list] = {}
    for nv, cfg in outer:
        name = f"sweep_{spec.axis}" + ("" if nv is None else f"_{spec.nested_axis}={nv:g}")
        jobs = []
        for v in spec.values:
            point = apply_axis(cfg, spec.axis, v)
            for policy in spec.policies:
                rp = None if reports_dir is None else str(reports_dir / f"{name}_{v:g}_{policy.value}.csv")
                jobs.append((point.with_(policy=policy), v, rp))
        groups[name] = jobs
    return groups


def run_sweep(spec: SweepSpec, out_dir: Path, workers: int = 1, keep_reports: bool = False) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    reports_dir = None
    if keep_reports:
        reports_dir = out_dir / "reports"
        reports_dir.mkdir(exist_ok=True)
    groups = sweep_jobs(spec, reports_dir)
    flat = [job for jobs in groups.values() for job in jobs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, flat, chunksize=max(1, len(flat) // (4 * workers))))
    else:
        results = [_sweep_point(job) for job in flat]
    paths, pos = [], 0
    for name, jobs in groups.items():
        path = out_dir / f"{name}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SWEEP_COLUMNS)
            for row in results[pos:pos + len(jobs)]:
                w.writerow(row)
        pos += len(jobs)
        paths.append(path)
    return paths


def cmd_sweep(args) -> int:
    text, base_dir = _read_config(args.spec)
    try:
        spec = load_sweep(text, base_dir, grid_ms=args.grid_ms, seed=args.seed)
    except (ProfileError, ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    try:
        paths = run_sweep(spec, Path(args.out_dir), workers=args.workers, keep_reports=args.keep_reports)
    except OracleTooLarge as exc:
        raise UsageError(str(exc)) from None
    for p in paths:
        print(p)
    return 0


# -- oracle comparison ----------------------------------------------------------------


def cmd_oracle_compare(args) -> int:
    config = _load(args.config, args)
    if args.ladder:
        try:
            config = config.with_ladder([int(x) for x in args.ladder.split(",")])
        except (ProfileError, ValueError) as exc:
            raise UsageError(str(exc)) from None
    if args.instances < 1 or args.frames < 1:
        raise UsageError("--instances and --frames must be >= 1")
    if args.frames > args.cap:
        raise UsageError(f"oracle instance too large: {args.frames} frames > cap {args.cap}")
    alpha = config.alpha if args.alpha is None else args.alpha
    rng = random.Random(args.seed or 0)
    gaps = []
    try:
        for i in range(args.instances):
            env, frames = random_instance(rng, config, args.frames)
            gaps.append(compare_with_oracle(
                env, frames, config.models, alpha, instance=i,
                grid_us=round(config.grid_ms * 1000), cap=args.cap,
            ))
    except OracleTooLarge as exc:
        raise UsageError(str(exc)) from None

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "oracle_gaps.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GAP_COLUMNS)
        for g in gaps:
            w.writerow([
                g.instance, g.n_frames, _fmt(g.bandwidth_bps), _fmt(g.frame_rate_fps), _fmt(g.rtt_delay_ms),
                _fmt(g.max_accuracy), _fmt(g.optimal_accuracy), _fmt(g.accuracy_gap),
                _fmt(g.max_utility), _fmt(g.optimal_utility), _fmt(g.utility_gap),
            ])
    acc = [g.accuracy_gap for g in gaps]
    util = [g.utility_gap for g in gaps]
    print(f"accuracy gap: max {max(acc):.6f} mean {sum(acc) / len(acc):.6f}")
    print(f"utility gap: max {max(util):.6f} mean {sum(util) / len(util):.6f}")
    bad = [g.instance for g in gaps if g.accuracy_gap < -NEGATIVE_GAP_TOL or g.utility_gap < -NEGATIVE_GAP_TOL]
    if bad:
        print(f"error: heuristic beat the exhaustive optimum on instances {bad}", file=sys.stderr)
        return 1
    return 0


# -- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default="out", help="directory for CSV and summary files (default: out)")
    common.add_argument("--grid-ms", type=float, default=None, help="DP time granularity in ms (default: config or 1)")
    common.add_argument("--seed", type=int, default=None, help="override the random seed")

    parser = argparse.ArgumentParser(prog="framesched", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="simulate one policy")
    p.add_argument("config")
    p.add_argument("--policy", default=None, help="override the policy named in the config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common], help="sweep one parameter over several policies")
    p.add_argument("spec")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--keep-reports", action="store_true", help="also write the per-frame report of every point")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle-compare", parents=[common], help="compare the heuristics with the exhaustive optimum")
    p.add_argument("config")
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--frames", type=int, default=6, help="frames per instance")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--ladder", default=None, help="comma-separated subset of the config ladder")
    p.add_argument("--cap", type=int, default=10, help="largest instance the oracle accepts")
    p.set_defaults(func=cmd_oracle_compare)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
