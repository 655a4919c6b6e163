"""Deterministic simulation of one policy over a synthetic or traced video."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

from .baselines import PLANNERS, PolicyId
from .executor import BandwidthSchedule, FrameOutcome, drive
from .profiles import (
    EnvProfile,
    Frame,
    FrameSource,
    ModelProfile,
    ProfileError,
    gen_frames,
    load_profiles,
    ms_to_us,
    parse_document,
)
from .sched import Placement, ScheduleDecision

UTILITY_POLICIES = (PolicyId.MAX_UTILITY, PolicyId.OPTIMAL_UTILITY)
ACCURACY_POLICIES = (PolicyId.MAX_ACCURACY, PolicyId.OPTIMAL_ACCURACY)


@dataclass(frozen=True)
class SimConfig:
    env: EnvProfile
    models: tuple[ModelProfile, ...]
    source: FrameSource
    policy: PolicyId
    alpha: float = 0.0
    n_frames: int = 300
    bandwidth_trace: tuple[tuple[float, float], ...] | None = None
    objective: str = "accuracy"
    window_ms: float = 1000.0
    grid_ms: float = 1.0
    oracle_cap: int = 10

    def __post_init__(self) -> None:
        object.__setattr__(self, "policy", PolicyId.parse(self.policy) if isinstance(self.policy, str) else self.policy)
        object.__setattr__(self, "models", tuple(self.models))
        if self.n_frames < 1:
            raise ValueError("n_frames must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.objective not in ("accuracy", "utility"):
            raise ValueError(f"objective must be 'accuracy' or 'utility', got {self.objective!r}")
        if self.bandwidth_trace is not None:
            trace = tuple((float(t), float(b)) for t, b in self.bandwidth_trace)
            if any(b <= 0 for _, b in trace):
                raise ValueError("bandwidth_trace values must be > 0")
            object.__setattr__(self, "bandwidth_trace", trace)
        if ms_to_us(self.grid_ms, "grid_ms") < 1:
            raise ValueError("grid_ms must be positive")
        if ms_to_us(self.window_ms, "window_ms") < self.env.gamma_us:
            raise ValueError("window_ms must be at least one frame interval")

    @property
    def effective_objective(self) -> str:
        if self.policy in UTILITY_POLICIES:
            return "utility"
        if self.policy in ACCURACY_POLICIES:
            return "accuracy"
        return self.objective

    def with_(self, **changes: Any) -> "SimConfig":
        return replace(self, **changes)

    def with_ladder(self, ladder: Sequence[int]) -> "SimConfig":
        """Restrict the resolution ladder (and every model's accuracy table) to ``ladder``."""
        ladder = tuple(sorted(ladder))
        models = []
        for m in self.models:
            missing = [r for r in ladder if r not in m.accuracy_by_resolution]
            if missing:
                raise ProfileError(f"model {m.name!r}: no accuracy for {missing}")
            acc = {r: m.accuracy_by_resolution[r] for r in ladder}
            # keep the local build's accuracy anchored to the original full resolution
            models.append(replace(m, accuracy_by_resolution=acc, npu_accuracy=m.local_accuracy() if m.local else None))
        return replace(self, models=tuple(models), source=replace(self.source, ladder=ladder))


@dataclass
class SimReport:
    outcomes: list[FrameOutcome]
    avg_accuracy: float
    achieved_fps: float
    utility: float
    miss_count: int
    frames: list[Frame] = field(default_factory=list, repr=False)

    @classmethod
    def from_outcomes(cls, outcomes, env: EnvProfile, alpha: float, frames=()) -> "SimReport":
        n = len(outcomes)
        processed = 0
        acc = 0.0
        for o in outcomes:
            if o.met_deadline:
                processed += 1
                acc += o.scored_accuracy
        fps = processed * env.frame_rate_fps / n
        utility = fps + alpha * acc / processed if processed else 0.0
        return cls(list(outcomes), acc / n, fps, utility, n - processed, list(frames))

    def summary(self) -> dict[str, Any]:
        return {
            "n_frames": len(self.outcomes),
            "avg_accuracy": self.avg_accuracy,
            "achieved_fps": self.achieved_fps,
            "utility": self.utility,
            "miss_count": self.miss_count,
        }


def run(config: SimConfig) -> SimReport:
    frames = gen_frames(config.source, config.env, config.n_frames)
    bandwidth = BandwidthSchedule(config.env.bandwidth_bps, config.bandwidth_trace)
    outcomes = drive(
        PLANNERS[config.policy],
        frames,
        config.models,
        config.env,
        bandwidth=bandwidth,
        alpha=config.alpha,
        objective=config.effective_objective,
        grid_us=ms_to_us(config.grid_ms),
        window_us=ms_to_us(config.window_ms),
        oracle_cap=config.oracle_cap,
    )
    return SimReport.from_outcomes(outcomes, config.env, config.alpha, frames)


# -- verification -----------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    ok: bool
    message: str = "OK"
    frame_index: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def _fail(msg: str, k: int) -> Verdict:
    return Verdict(False, f"{msg} at frame {k}", k)


def check_schedule(
    outcomes: Sequence[FrameOutcome],
    env: EnvProfile,
    models: Sequence[ModelProfile],
    frames: Sequence[Frame],
    bandwidth_trace: Sequence[tuple[float, float]] | None = None,
) -> Verdict:
    """Re-derive every start/finish time from the decisions alone and verify
    resource exclusivity, deadline flags and scores. Returns the first
    violation found."""
    by_id = {m.model_id: m for m in models}
    rate_pts = sorted((round(t * 1000), round(b)) for t, b in (bandwidth_trace or [])) or [(0, round(env.bandwidth_bps))]
    if rate_pts[0][0] > 0:
        rate_pts.insert(0, (0, round(env.bandwidth_bps)))

    def rate(t: int) -> int:
        r = rate_pts[0][1]
        for t0, b in rate_pts:
            if t0 <= t:
                r = b
        return r

    if len(outcomes) != len(frames):
        return Verdict(False, "outcome count does not match frame count")
    T = env.deadline_us
    uplink, npu = [], []
    for k, (o, f) in enumerate(zip(outcomes, frames)):
        d = o.decision
        if o.frame_index != f.index or d.frame_index != f.index:
            return _fail("frame index mismatch", k)
        if d.placement is Placement.SKIP:
            if o.start_us is not None or o.finish_us is not None or o.met_deadline or o.scored_accuracy:
                return _fail("skipped frame has timing or score", k)
            continue
        m = by_id.get(d.model_id)
        if m is None:
            return _fail("unknown model", k)
        if d.placement is Placement.OFFLOAD:
            if not m.remote:
                return _fail("model has no server deployment", k)
            expected_acc = m.accuracy(d.resolution)
        else:
            if not m.local:
                return _fail("model has no NPU deployment", k)
            expected_acc = m.local_accuracy()
        if d.accuracy != expected_acc:
            return _fail("decision accuracy does not match profile", k)
        if o.start_us is None:
            if o.finish_us is not None or o.met_deadline or o.scored_accuracy:
                return _fail("dropped frame has timing or score", k)
            continue
        if o.start_us < f.arrival_us:
            return _fail("started before arrival", k)
        if d.placement is Placement.OFFLOAD:
            tx = -(-f.size(d.resolution) * 1_000_000 // rate(o.start_us))
            if o.finish_us != o.start_us + tx + m.server_us + env.rtt_us:
                return _fail("offload finish time inconsistent", k)
            uplink.append((o.start_us, o.start_us + tx, k))
        else:
            if o.finish_us != o.start_us + m.npu_us:
                return _fail("NPU finish time inconsistent", k)
            npu.append((o.start_us, o.finish_us, k))
        met = o.finish_us <= f.arrival_us + T
        if o.met_deadline != met:
            return _fail("deadline flag wrong", k)
        if o.scored_accuracy != (d.accuracy if met else 0.0):
            return _fail("score inconsistent with deadline", k)

    for name, intervals in (("uplink", uplink), ("NPU", npu)):
        intervals.sort()
        for (s0, e0, _), (s1, _, k1) in zip(intervals, intervals[1:]):
            if s1 < e0:
                return _fail(f"{name} overlap", k1)

    # Replay: each resource serves its frames in index order, as early as possible.
    up_free = npu_free = 0
    for k, (o, f) in enumerate(zip(outcomes, frames)):
        d = o.decision
        if d.placement is Placement.SKIP:
            continue
        free = up_free if d.placement is Placement.OFFLOAD else npu_free
        start = max(free, f.arrival_us)
        if start > f.arrival_us + T:
            if o.start_us is not None:
                return _fail("frame should have been dropped", k)
            continue
        if o.start_us != start:
            return _fail("start time differs from replay", k)
        if d.placement is Placement.OFFLOAD:
            up_free = start + -(-f.size(d.resolution) * 1_000_000 // rate(start))
        else:
            npu_free = o.finish_us
    return Verdict(True)


# -- files ----------------------------------------------------------------------------

CSV_HEADER = ["index", "placement", "model", "resolution", "start_us", "finish_us", "met", "accuracy"]


def _blank(v) -> str:
    return "" if v is None else str(v)


def write_report_csv(report: SimReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for o in report.outcomes:
            d = o.decision
            w.writerow([
                o.frame_index, d.placement.value, _blank(d.model_id), _blank(d.resolution),
                _blank(o.start_us), _blank(o.finish_us), int(o.met_deadline), repr(o.scored_accuracy),
            ])


def write_summary(report: SimReport, path: str | Path, extra: Mapping[str, Any] | None = None) -> None:
    data = dict(extra or {})
    data.update(report.summary())
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_report_csv(path: str | Path, models: Sequence[ModelProfile]) -> list[FrameOutcome]:
    """Inverse of :func:`write_report_csv`. The file holds only scored accuracy,
    so decision accuracies are restored from ``models``."""
    by_id = {m.model_id: m for m in models}

    def opt_int(v: str) -> int | None:
        return None if v == "" else int(v)

    outcomes = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            placement = Placement(row["placement"])
            idx = int(row["index"])
            if placement is Placement.SKIP:
                d = ScheduleDecision.skip(idx)
            else:
                m, r = by_id[int(row["model"])], int(row["resolution"])
                acc = m.accuracy(r) if placement is Placement.OFFLOAD else m.local_accuracy()
                d = ScheduleDecision(idx, placement, m.model_id, r, acc)
            outcomes.append(FrameOutcome(
                idx, d, opt_int(row["start_us"]), opt_int(row["finish_us"]), row["met"] == "1", float(row["accuracy"]),
            ))
    return outcomes


def load_sim_config(text: str, base_dir: str | Path | None = None, **overrides: Any) -> SimConfig:
    """Build a :class:`SimConfig` from a profile document with a ``[sim]`` table."""
    doc = parse_document(text)
    models, env, source = load_profiles(doc, base_dir)
    sim = dict(doc.get("sim", {}))
    sim.update({k: v for k, v in overrides.items() if v is not None})
    known = {"policy", "alpha", "n_frames", "bandwidth_trace", "objective", "window_ms", "grid_ms", "oracle_cap"}
    unknown = set(sim) - known
    if unknown:
        raise ProfileError(f"[sim]: unknown keys {sorted(unknown)}")
    policy = PolicyId.parse(str(sim.pop("policy", "MaxAccuracy")))
    trace = sim.pop("bandwidth_trace", None)
    return SimConfig(
        env=env,
        models=tuple(models),
        source=source,
        policy=policy,
        bandwidth_trace=tuple(tuple(p) for p in trace) if trace else None,
        **sim,
    )


# -- heuristic vs exhaustive optimum ----------------------------------------------------


@dataclass(frozen=True)
class OracleGap:
    instance: int
    n_frames: int
    bandwidth_bps: float
    frame_rate_fps: float
    rtt_delay_ms: float
    max_accuracy: float
    optimal_accuracy: float
    max_utility: float
    optimal_utility: float

    @property
    def accuracy_gap(self) -> float:
        return self.optimal_accuracy - self.max_accuracy

    @property
    def utility_gap(self) -> float:
        return self.optimal_utility - self.max_utility


def random_instance(rng, base: SimConfig, n_frames: int) -> tuple[EnvProfile, list[Frame]]:
    """Draw an ``n_frames`` instance around ``base``: bandwidth 0.5-5 Mbps,
    10-50 fps, upload delay 20-250 ms and 20% frame-size jitter."""
    env = base.env.with_(
        bandwidth_bps=float(rng.randrange(500, 5001)) * 1000.0,
        frame_rate_fps=float(rng.randrange(10, 51)),
        rtt_delay_ms=float(rng.randrange(20, 251)),
    )
    source = replace(base.source, mode="synthetic", jitter_fraction=0.2, rng_seed=rng.randrange(2**31))
    return env, gen_frames(source, env, n_frames)


def compare_with_oracle(
    env: EnvProfile, frames: Sequence[Frame], models: Sequence[ModelProfile], alpha: float,
    *, instance: int = 0, grid_us: int = 1000, cap: int = 10,
) -> OracleGap:
    from .baselines import optimal_oracle, plan_max_accuracy, plan_max_utility

    heur_acc = SimReport.from_outcomes(drive(plan_max_accuracy, frames, models, env, grid_us=grid_us), env, alpha)
    heur_util = SimReport.from_outcomes(drive(plan_max_utility, frames, models, env, alpha=alpha), env, alpha)
    opt_acc, _ = optimal_oracle(frames, models, env, "accuracy", alpha, cap=cap)
    opt_util, _ = optimal_oracle(frames, models, env, "utility", alpha, cap=cap)
    return OracleGap(
        instance, len(frames), env.bandwidth_bps, env.frame_rate_fps, env.rtt_delay_ms,
        heur_acc.avg_accuracy, opt_acc, heur_util.utility, opt_util,
    )
