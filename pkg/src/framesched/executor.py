"""Serial uplink + serial NPU execution of schedule decisions.

Each resource serves frames in index order, starting each as soon as both
the resource and the frame are available. A frame whose turn comes after its
deadline has already passed is dropped without using the resource. A frame
that starts in time but finishes late still holds the resource and scores 0.
Offloaded frames occupy the uplink only while transmitting; the server runs
them in parallel.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, replace
from typing import Callable, Sequence

from .profiles import EnvProfile, Frame, ModelProfile, ms_to_us, tx_time_us
from .sched import Placement, ScheduleDecision


class BandwidthSchedule:
    """Piecewise-constant uplink rate. A transmission keeps the rate in force at its start."""

    def __init__(self, bandwidth_bps: float, trace: Sequence[tuple[float, float]] | None = None):
        if not trace:
            self.times = [0]
            self.rates = [int(round(bandwidth_bps))]
        else:
            pts = sorted((ms_to_us(t, "bandwidth_trace time"), float(b)) for t, b in trace)
            if any(b <= 0 for _, b in pts):
                raise ValueError("bandwidth_trace values must be > 0")
            if pts[0][0] > 0:
                pts.insert(0, (0, float(bandwidth_bps)))
            self.times = [t for t, _ in pts]
            self.rates = [int(round(b)) for _, b in pts]
        if min(self.rates) < 1:
            raise ValueError("bandwidth must be at least 1 bit/s")

    def rate_at(self, t_us: int) -> int:
        return self.rates[max(bisect_right(self.times, t_us) - 1, 0)]


@dataclass(frozen=True)
class FrameOutcome:
    frame_index: int
    decision: ScheduleDecision
    start_us: int | None
    finish_us: int | None
    met_deadline: bool
    scored_accuracy: float

    @property
    def start_ms(self) -> float | None:
        return None if self.start_us is None else self.start_us / 1000.0

    @property
    def finish_ms(self) -> float | None:
        return None if self.finish_us is None else self.finish_us / 1000.0


@dataclass(frozen=True)
class RoundContext:
    """What a policy sees when a round starts.

    ``frames`` are the not-yet-scheduled frames, head first. Only frames with
    ``arrival_us <= now_us`` have been captured, so policies read sizes from
    those alone; later frames are used for their arrival times only.
    ``env.bandwidth_bps`` is the rate currently in force; ``bandwidth`` is the
    full schedule, read only by the offline optimum.
    """

    frames: Sequence[Frame]
    now_us: int
    npu_free_us: int
    uplink_free_us: int
    env: EnvProfile
    models: Sequence[ModelProfile]
    alpha: float = 0.0
    objective: str = "accuracy"
    grid_us: int = 1000
    window_us: int = 1_000_000
    oracle_cap: int = 10
    bandwidth: "BandwidthSchedule | None" = None


Planner = Callable[[RoundContext], list[ScheduleDecision]]


class Executor:
    def __init__(self, env: EnvProfile, models: Sequence[ModelProfile], bandwidth: BandwidthSchedule):
        self.env = env
        self.models = {m.model_id: m for m in models}
        self.bandwidth = bandwidth
        self.uplink_free = 0
        self.npu_free = 0

    def execute(self, d: ScheduleDecision, frame: Frame) -> FrameOutcome:
        deadline = frame.arrival_us + self.env.deadline_us
        if d.placement is Placement.SKIP:
            return FrameOutcome(frame.index, d, None, None, False, 0.0)
        m = self.models[d.model_id]
        if d.placement is Placement.OFFLOAD:
            start = max(self.uplink_free, frame.arrival_us)
            if start > deadline:
                return FrameOutcome(frame.index, d, None, None, False, 0.0)
            tx = tx_time_us(frame.size(d.resolution), self.bandwidth.rate_at(start))
            self.uplink_free = start + tx
            finish = start + tx + m.server_us + self.env.rtt_us
        else:
            start = max(self.npu_free, frame.arrival_us)
            if start > deadline:
                return FrameOutcome(frame.index, d, None, None, False, 0.0)
            finish = start + m.npu_us
            self.npu_free = finish
        met = finish <= deadline
        return FrameOutcome(frame.index, d, start, finish, met, d.accuracy if met else 0.0)


def drive(
    planner: Planner,
    frames: Sequence[Frame],
    models: Sequence[ModelProfile],
    env: EnvProfile,
    *,
    bandwidth: BandwidthSchedule | None = None,
    **ctx_kwargs,
) -> list[FrameOutcome]:
    """Run ``planner`` round by round over ``frames`` and execute its decisions.

    A round starts when the head frame has arrived and the uplink is idle.
    Committed decisions are never revisited.
    """
    bandwidth = bandwidth or BandwidthSchedule(env.bandwidth_bps)
    ex = Executor(env, models, bandwidth)
    outcomes: list[FrameOutcome] = []
    p = 0
    while p < len(frames):
        head = frames[p]
        now = max(ex.uplink_free, head.arrival_us)
        rate = bandwidth.rate_at(now)
        round_env = env if rate == env.bandwidth else replace(env, bandwidth_bps=float(rate))
        ctx = RoundContext(frames[p:], now, ex.npu_free, ex.uplink_free, round_env, models, bandwidth=bandwidth, **ctx_kwargs)
        decisions = planner(ctx)
        if not decisions:
            raise RuntimeError("planner returned no decisions")
        for k, d in enumerate(decisions):
            if d.frame_index != frames[p + k].index:
                raise RuntimeError(f"planner decided frame {d.frame_index} out of order (expected {frames[p + k].index})")
            outcomes.append(ex.execute(d, frames[p + k]))
        p += len(decisions)
    return outcomes
