"""Comparison policies and the exhaustive optimum.

Every policy is a planner: given a :class:`RoundContext` it returns decisions
for a prefix of the pending frames. The module-level ``*_policy`` helpers run
a planner over a whole frame list and return the decisions.
"""

from __future__ import annotations

import enum
from typing import Sequence

import numpy as np

from . import kernels
from .executor import BandwidthSchedule, Executor, RoundContext, drive
from .profiles import EnvProfile, Frame, ModelProfile, tx_time_us
from .sched import (
    ACC_EPS,
    UTIL_EPS,
    Placement,
    ScheduleDecision,
    _local_acc_schedule,
    _local_utility_schedule,
    best_server_model,
    ladder_of,
    local_models,
    max_accuracy_round,
    max_utility_round,
    round_utility,
    server_models,
)

OBJECTIVES = ("accuracy", "utility")
ORACLE_COMBINATION_LIMIT = 10**8


class PolicyId(str, enum.Enum):
    OFFLOAD = "Offload"
    LOCAL = "Local"
    DEEPDECISION = "DeepDecision"
    OPTIMAL_ACCURACY = "OptimalAccuracy"
    OPTIMAL_UTILITY = "OptimalUtility"
    MAX_ACCURACY = "MaxAccuracy"
    MAX_UTILITY = "MaxUtility"

    @classmethod
    def parse(cls, name: str) -> "PolicyId":
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(p.value for p in cls)
            raise ValueError(f"unknown policy {name!r}; valid policies: {valid}") from None


class OracleTooLarge(ValueError):
    pass


def _check_objective(objective: str) -> None:
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")


# -- planners -------------------------------------------------------------------


def plan_offload(ctx: RoundContext) -> list[ScheduleDecision]:
    """Offload the head frame at the most accurate (model, resolution) whose upload
    fits in one frame interval and whose result returns in time."""
    head = ctx.frames[0]
    env = ctx.env
    servers = server_models(ctx.models)
    best, best_acc = None, -1.0
    for r in reversed(ladder_of(head)):
        tx = tx_time_us(head.size(r), env.bandwidth)
        if tx > env.gamma_us:
            continue
        m = best_server_model(servers, r, tx, ctx.now_us, head, env)
        if m is not None and m.accuracy(r) > best_acc + ACC_EPS:
            best, best_acc = (m, r), m.accuracy(r)
    if best is None:
        return [ScheduleDecision.skip(head.index)]
    m, r = best
    return [ScheduleDecision(head.index, Placement.OFFLOAD, m.model_id, r, best_acc)]


def plan_local(ctx: RoundContext) -> list[ScheduleDecision]:
    """Schedule every pending frame on the NPU with the local DP."""
    frames = ctx.frames
    locals_ = local_models(ctx.models)
    r_max = ladder_of(frames[0])[-1]
    base = frames[0].arrival_us
    if ctx.objective == "utility":
        _, decisions, _ = _local_utility_schedule(
            frames, locals_, ctx.env, ctx.alpha, ctx.npu_free_us, base, r_max, len(frames)
        )
    else:
        _, decisions = _local_acc_schedule(frames, locals_, ctx.env, ctx.npu_free_us, base, ctx.grid_us, r_max)
    return decisions


def _window_frames(ctx: RoundContext) -> list[Frame]:
    w = ctx.frames[0].arrival_us // ctx.window_us
    out = []
    for f in ctx.frames:
        if f.arrival_us // ctx.window_us != w:
            break
        out.append(f)
    return out


def deepdecision_combinations(models: Sequence[ModelProfile], ladder: Sequence[int]):
    """Uniform (placement, model, resolution) choices, in tie-break order."""
    for m in server_models(models):
        for r in reversed(ladder):
            yield Placement.OFFLOAD, m, r
    for m in local_models(models):
        yield Placement.LOCAL, m, ladder[-1]


def plan_deepdecision(ctx: RoundContext) -> list[ScheduleDecision]:
    """Pick one (placement, model, resolution) for every frame of the current window.

    Each combination is scored by simulating the window from the current
    resource state. Only the head frame has been captured, so its sizes
    stand in for the whole window.
    """
    frames = _window_frames(ctx)
    head = frames[0]
    ladder = ladder_of(head)
    env = ctx.env
    bw = BandwidthSchedule(env.bandwidth_bps)
    eps = UTIL_EPS if ctx.objective == "utility" else ACC_EPS
    best, best_score = None, float("-inf")
    for placement, m, r in deepdecision_combinations(ctx.models, ladder):
        acc = m.accuracy(r) if placement is Placement.OFFLOAD else m.local_accuracy()
        ex = Executor(env, ctx.models, bw)
        ex.uplink_free, ex.npu_free = ctx.uplink_free_us, ctx.npu_free_us
        outcomes = []
        for f in frames:
            est = Frame(f.index, f.arrival_us, head.size_bits_by_resolution)
            outcomes.append(ex.execute(ScheduleDecision(f.index, placement, m.model_id, r, acc), est))
        if ctx.objective == "utility":
            scored = [
                ScheduleDecision(o.frame_index, placement, m.model_id, r, acc) if o.met_deadline
                else ScheduleDecision.skip(o.frame_index)
                for o in outcomes
            ]
            score = round_utility(scored, env, ctx.alpha)
        else:
            score = 0.0
            for o in outcomes:
                score += o.scored_accuracy
        if score > best_score + eps:
            best, best_score = (placement, m, r, acc), score
    placement, m, r, acc = best
    return [ScheduleDecision(f.index, placement, m.model_id, r, acc) for f in frames]


def plan_max_accuracy(ctx: RoundContext) -> list[ScheduleDecision]:
    return max_accuracy_round(ctx.frames, ctx.models, ctx.env, ctx.npu_free_us, now=ctx.now_us, grid_us=ctx.grid_us).decisions


def plan_max_utility(ctx: RoundContext) -> list[ScheduleDecision]:
    return max_utility_round(ctx.frames, ctx.models, ctx.env, ctx.alpha, ctx.npu_free_us, now=ctx.now_us).decisions


def _plan_optimal(ctx: RoundContext, objective: str) -> list[ScheduleDecision]:
    _, decisions = optimal_oracle(
        ctx.frames, ctx.models, ctx.env, objective, ctx.alpha,
        cap=ctx.oracle_cap, uplink_free=ctx.uplink_free_us, npu_free=ctx.npu_free_us,
        bandwidth=ctx.bandwidth,
    )
    return decisions


def plan_optimal_accuracy(ctx: RoundContext) -> list[ScheduleDecision]:
    return _plan_optimal(ctx, "accuracy")


def plan_optimal_utility(ctx: RoundContext) -> list[ScheduleDecision]:
    return _plan_optimal(ctx, "utility")


PLANNERS = {
    PolicyId.OFFLOAD: plan_offload,
    PolicyId.LOCAL: plan_local,
    PolicyId.DEEPDECISION: plan_deepdecision,
    PolicyId.OPTIMAL_ACCURACY: plan_optimal_accuracy,
    PolicyId.OPTIMAL_UTILITY: plan_optimal_utility,
    PolicyId.MAX_ACCURACY: plan_max_accuracy,
    PolicyId.MAX_UTILITY: plan_max_utility,
}


# -- whole-run helpers ------------------------------------------------------------


def _decisions(planner, frames, models, env, **kw) -> list[ScheduleDecision]:
    return [o.decision for o in drive(planner, frames, models, env, **kw)]


def offload_policy(frames, models, env) -> list[ScheduleDecision]:
    return _decisions(plan_offload, frames, models, env)


def local_policy(frames, models, env, objective: str = "accuracy", alpha: float = 0.0, grid_us: int = 1000):
    _check_objective(objective)
    return _decisions(plan_local, frames, models, env, objective=objective, alpha=alpha, grid_us=grid_us)


def deepdecision_policy(frames, models, env, window_ms: float = 1000.0, objective: str = "accuracy", alpha: float = 0.0):
    _check_objective(objective)
    window_us = int(round(window_ms * 1000))
    if window_us < env.gamma_us:
        raise ValueError("window_ms must be at least one frame interval")
    return _decisions(plan_deepdecision, frames, models, env, objective=objective, alpha=alpha, window_us=window_us)


# -- oracle -----------------------------------------------------------------------


def oracle_options(models: Sequence[ModelProfile], ladder: Sequence[int]):
    """Per-frame choices in tie-break order: offloads (model, then resolution
    high to low), then local models, then skip."""
    opts = []
    for m in server_models(models):
        for r in reversed(ladder):
            opts.append((Placement.OFFLOAD, m, r))
    for m in local_models(models):
        opts.append((Placement.LOCAL, m, ladder[-1]))
    opts.append((Placement.SKIP, None, None))
    return opts


def optimal_oracle(
    frames: Sequence[Frame],
    models: Sequence[ModelProfile],
    env: EnvProfile,
    objective: str = "accuracy",
    alpha: float = 0.0,
    *,
    cap: int = 10,
    uplink_free: int = 0,
    npu_free: int = 0,
    bandwidth: BandwidthSchedule | None = None,
    options: Sequence | None = None,
) -> tuple[float, list[ScheduleDecision]]:
    """Best schedule over every per-frame (placement, model, resolution) or skip.

    Returns the objective value (mean accuracy over all frames, or utility)
    and the decisions. Ties resolve to the first assignment in option order.
    """
    _check_objective(objective)
    n = len(frames)
    ladder = ladder_of(frames[0])
    opts = list(options) if options is not None else oracle_options(models, ladder)
    if n > cap:
        raise OracleTooLarge(f"oracle instance too large: {n} frames > cap {cap}")
    if len(opts) ** n > ORACLE_COMBINATION_LIMIT:
        raise OracleTooLarge(f"oracle instance too large: {len(opts)}^{n} combinations")
    bandwidth = bandwidth or BandwidthSchedule(env.bandwidth_bps)
    r_index = {r: i for i, r in enumerate(ladder)}

    kind, res, dur, acc = [], [], [], []
    for placement, m, r in opts:
        if placement is Placement.OFFLOAD:
            kind.append(kernels.OPT_OFFLOAD); res.append(r_index[r]); dur.append(m.server_us); acc.append(m.accuracy(r))
        elif placement is Placement.LOCAL:
            kind.append(kernels.OPT_LOCAL); res.append(0); dur.append(m.npu_us); acc.append(m.local_accuracy())
        else:
            kind.append(kernels.OPT_SKIP); res.append(0); dur.append(0); acc.append(0.0)
    sizes = np.array([[f.size(r) for r in ladder] for f in frames], dtype=np.int64)
    value, choice = kernels.oracle_search(
        np.array([f.arrival_us for f in frames], dtype=np.int64),
        env.deadline_us, uplink_free, npu_free, sizes,
        np.array(bandwidth.times, dtype=np.int64), np.array(bandwidth.rates, dtype=np.int64),
        env.rtt_us, kind, res, dur, acc,
        0 if objective == "accuracy" else 1, float(alpha), float(env.frame_rate_fps),
    )
    decisions = []
    for f, o in zip(frames, choice):
        placement, m, r = opts[o]
        if placement is Placement.SKIP:
            decisions.append(ScheduleDecision.skip(f.index))
        else:
            decisions.append(ScheduleDecision(f.index, placement, m.model_id, r, acc[o]))
    if objective == "accuracy":
        value = value / n
    return value, decisions
