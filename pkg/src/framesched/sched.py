"""Per-round schedulers: Max-Accuracy and Max-Utility.

A round starts when the uplink is idle and frame ``frames[0]`` (I0) is at the
head of the buffer. I0 is offloaded at some resolution; the frames that arrive
while it is being transmitted are scheduled on the NPU at full resolution.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .profiles import EnvProfile, Frame, ModelProfile, tx_time_us

NEG_INF = float("-inf")
ACC_EPS = 1e-12
UTIL_EPS = 1e-9
DEFAULT_GRID_US = 1000


class Placement(str, enum.Enum):
    OFFLOAD = "offload"
    LOCAL = "local"
    SKIP = "skip"


@dataclass(frozen=True)
class ScheduleDecision:
    frame_index: int
    placement: Placement
    model_id: int | None = None
    resolution: int | None = None
    accuracy: float = 0.0

    def __post_init__(self) -> None:
        if self.placement is Placement.SKIP:
            if self.model_id is not None or self.resolution is not None:
                raise ValueError("skip decisions carry no model and no resolution")
        elif self.model_id is None or self.resolution is None:
            raise ValueError(f"{self.placement.value} decision needs a model and a resolution")

    @classmethod
    def skip(cls, frame_index: int) -> "ScheduleDecision":
        return cls(frame_index, Placement.SKIP)

    @property
    def processed(self) -> bool:
        return self.placement is not Placement.SKIP


@dataclass
class RoundPlan:
    """Decisions for one round, covering consecutive frames from the round's I0.

    ``round_utility`` is the value the round's own objective assigned to the
    plan: the average accuracy over the round for Max-Accuracy, the offload
    score plus the local DP utility for Max-Utility.
    """

    decisions: list[ScheduleDecision]
    round_accuracy_sum: float
    round_utility: float
    n_local: int


@dataclass
class AccDpTable:
    """Dense view of the max-accuracy table: ``h[k, g]`` is the best accuracy
    sum for the first ``k`` buffered frames with the k-th done by ``g * grid_us``."""

    h: np.ndarray
    grid_us: int
    rows: tuple

    def value(self, k: int, t_us: int) -> float:
        g = t_us // self.grid_us
        if g < 0:
            return NEG_INF
        g = min(g, self.h.shape[1] - 1)
        return float(self.h[k, g])


@dataclass(frozen=True, eq=False)
class UtilityTriple:
    t: int
    u: float
    m: int
    parent: "UtilityTriple | None" = field(default=None, repr=False)
    model_index: int = -1


# -- helpers ------------------------------------------------------------------


def local_models(models: Sequence[ModelProfile]) -> list[ModelProfile]:
    return sorted((m for m in models if m.local), key=lambda m: m.model_id)


def server_models(models: Sequence[ModelProfile]) -> list[ModelProfile]:
    return sorted((m for m in models if m.remote), key=lambda m: m.model_id)


def ladder_of(frame: Frame) -> list[int]:
    return sorted(frame.size_bits_by_resolution)


def buffered(frames: Sequence[Frame], now: int) -> list[Frame]:
    out = [frames[0]]
    out.extend(f for f in frames[1:] if f.arrival_us <= now)
    return out


def best_server_model(models, resolution, tx, now, frame, env) -> ModelProfile | None:
    """Most accurate server model that returns I0's result by its deadline."""
    limit = frame.arrival_us + env.deadline_us
    for m in sorted(models, key=lambda m: (-m.accuracy(resolution), m.model_id)):
        if now + tx + m.server_us + env.rtt_us <= limit:
            return m
    return None


def backtrack_acc_dp(rows) -> tuple[float, list[int], list[int | None]]:
    """Best value in the last row and the per-frame model indices (-1 = skip)."""
    offsets, values, times, pcell, pmodel = rows
    n = len(offsets) - 1
    last = values[n]
    best_c, best_v = -1, NEG_INF
    for c in range(last.shape[0]):
        if last[c] > best_v + ACC_EPS:
            best_c, best_v = c, float(last[c])
    choices: list[int] = [-1] * n
    finishes: list[int | None] = [None] * n
    c = best_c
    for k in range(n, 0, -1):
        j = int(pmodel[k, c])
        choices[k - 1] = j
        if j >= 0:
            finishes[k - 1] = int(times[k, c])
        c = int(pcell[k, c])
    return best_v, choices, finishes


def dense_table(rows, n_cells: int, grid_us: int) -> AccDpTable:
    offsets, values, _, _, _ = rows
    h = np.full((len(offsets), n_cells), NEG_INF)
    for k in range(len(offsets)):
        for c in np.flatnonzero(values[k] > NEG_INF):
            g = int(offsets[k]) + int(c)
            if g < n_cells:
                h[k, g] = max(h[k, g], values[k, c])
    np.maximum.accumulate(h, axis=1, out=h)
    return AccDpTable(h, grid_us, rows)


def _local_acc_schedule(frames, locals_, env, npu_free_at, base, grid_us, r_max):
    arrivals = np.array([f.arrival_us - base for f in frames], dtype=np.int64)
    durs = np.array([m.npu_us for m in locals_], dtype=np.int64)
    accs = np.array([m.local_accuracy() for m in locals_], dtype=np.float64)
    rows = kernels.acc_dp(arrivals, env.deadline_us, max(npu_free_at - base, 0), durs, accs, grid_us)
    value, choices, _ = backtrack_acc_dp(rows)
    decisions = []
    for f, j in zip(frames, choices):
        if j < 0:
            decisions.append(ScheduleDecision.skip(f.index))
        else:
            m = locals_[j]
            decisions.append(ScheduleDecision(f.index, Placement.LOCAL, m.model_id, r_max, m.local_accuracy()))
    return value, decisions


# -- Max-Accuracy ---------------------------------------------------------------


def acc_dp_fill(
    n_l: int, models: Sequence[ModelProfile], env: EnvProfile, t_idle: int, grid_us: int = DEFAULT_GRID_US
) -> AccDpTable:
    """Max-accuracy table for ``n_l`` frames buffered behind an offloaded I0.

    Frame k arrives at ``k * gamma``; the NPU is free from ``t_idle`` (us,
    relative to I0's arrival). The table spans ``[0, n_l * gamma + T]``.
    """
    locals_ = local_models(models)
    gamma = env.gamma_us
    arrivals = np.arange(1, n_l + 1, dtype=np.int64) * gamma
    durs = np.array([m.npu_us for m in locals_], dtype=np.int64)
    accs = np.array([m.local_accuracy() for m in locals_], dtype=np.float64)
    rows = kernels.acc_dp(arrivals, env.deadline_us, t_idle, durs, accs, grid_us)
    n_cells = (n_l * gamma + env.deadline_us) // grid_us + 1
    return dense_table(rows, n_cells, grid_us)


def max_accuracy_round(
    frames: Sequence[Frame],
    models: Sequence[ModelProfile],
    env: EnvProfile,
    npu_free_at: int,
    *,
    now: int | None = None,
    grid_us: int = DEFAULT_GRID_US,
) -> RoundPlan:
    """Plan one Max-Accuracy round for the buffer window ``frames``.

    Each resolution is tried for I0 with the most accurate server model that
    meets the deadline; the frames buffered during its upload get the local
    DP. A local-only plan for the frames already buffered competes on equal
    terms. The plan with the highest average accuracy per frame wins; ties go
    to the earlier candidate (higher resolution first, local-only last).
    """
    head = frames[0]
    now = head.arrival_us if now is None else now
    ladder = ladder_of(head)
    r_max = ladder[-1]
    servers = server_models(models)
    locals_ = local_models(models)
    gamma = env.gamma_us

    best_avg = NEG_INF
    best: RoundPlan | None = None
    for r in reversed(ladder):
        tx = tx_time_us(head.size(r), env.bandwidth)
        m = best_server_model(servers, r, tx, now, head, env)
        if m is None:
            continue
        n_l = min(tx // gamma, len(frames) - 1)
        local_value, local_dec = _local_acc_schedule(
            frames[1 : 1 + n_l], locals_, env, npu_free_at, head.arrival_us, grid_us, r_max
        )
        a = m.accuracy(r)
        avg = (a + local_value) / (n_l + 1)
        if avg > best_avg + ACC_EPS:
            best_avg = avg
            decisions = [ScheduleDecision(head.index, Placement.OFFLOAD, m.model_id, r, a)] + local_dec
            best = RoundPlan(decisions, a + local_value, avg, n_l)

    window = buffered(frames, now)
    value, decisions = _local_acc_schedule(window, locals_, env, npu_free_at, head.arrival_us, grid_us, r_max)
    avg = value / len(window)
    if best is None or avg > best_avg + ACC_EPS:
        best = RoundPlan(decisions, value, avg, len(window))
    return best


# -- Max-Utility ------------------------------------------------------------------


def prune_dominated(triples: Sequence[UtilityTriple]) -> list[UtilityTriple]:
    """Drop every triple for which another has t' <= t and u' >= u.

    Among exact duplicates the first one is kept. The result is sorted by t
    with strictly increasing u.
    """
    order = sorted(range(len(triples)), key=lambda i: (triples[i].t, -triples[i].u, i))
    kept: list[UtilityTriple] = []
    best_u = NEG_INF
    for i in order:
        tr = triples[i]
        if tr.u > best_u:
            kept.append(tr)
            best_u = tr.u
    return kept


def utility_dp(
    arrivals: Sequence[int],
    deadline_us: int,
    t_idle: int,
    durations: Sequence[int],
    accuracies: Sequence[float],
    alpha: float,
    fps: float,
    n_norm: int,
) -> list[list[UtilityTriple]]:
    """Build the pruned triple lists U(0..n) for frames arriving at ``arrivals``.

    The throughput term of a triple is ``m * fps / n_norm``. Every triple keeps
    a parent link, so a schedule is recovered by walking parents.
    """
    levels = [[UtilityTriple(t_idle, 0.0, 0)]]
    for a in arrivals:
        limit = a + deadline_us
        cand: list[UtilityTriple] = [UtilityTriple(p.t, p.u, p.m, p, -1) for p in levels[-1]]
        for p in levels[-1]:
            start = max(p.t, a)
            for j, (d, acc) in enumerate(zip(durations, accuracies)):
                t_new = start + d
                if t_new > limit:
                    continue
                m = p.m
                avg = (m / (m + 1)) * (p.u - m * fps / n_norm) + alpha * acc / (m + 1)
                cand.append(UtilityTriple(t_new, avg + (m + 1) * fps / n_norm, m + 1, p, j))
        levels.append(prune_dominated(cand))
    return levels


def backtrack_triples(final: UtilityTriple, n: int) -> list[int]:
    choices = [-1] * n
    tr = final
    for k in range(n - 1, -1, -1):
        choices[k] = tr.model_index
        tr = tr.parent
    return choices


def _local_utility_schedule(frames, locals_, env, alpha, npu_free_at, base, r_max, n_norm):
    levels = utility_dp(
        [f.arrival_us - base for f in frames],
        env.deadline_us,
        max(npu_free_at - base, 0),
        [m.npu_us for m in locals_],
        [m.local_accuracy() for m in locals_],
        alpha,
        env.frame_rate_fps,
        n_norm,
    )
    final = levels[-1][-1]
    decisions = []
    for f, j in zip(frames, backtrack_triples(final, len(frames))):
        if j < 0:
            decisions.append(ScheduleDecision.skip(f.index))
        else:
            m = locals_[j]
            decisions.append(ScheduleDecision(f.index, Placement.LOCAL, m.model_id, r_max, m.local_accuracy()))
    return final, decisions, levels


def offload_score(bandwidth: int, size_bits: int, alpha: float, accuracy: float) -> float:
    return bandwidth / size_bits + alpha * accuracy


def max_utility_round(
    frames: Sequence[Frame],
    models: Sequence[ModelProfile],
    env: EnvProfile,
    alpha: float,
    npu_free_at: int,
    *,
    now: int | None = None,
) -> RoundPlan:
    """Plan one Max-Utility round.

    I0 goes to the (model, resolution) pair maximising ``B / S + alpha * a``
    among pairs that meet the deadline. The buffered frames are then either
    skipped or run locally according to the triple DP. Without a feasible
    pair, the DP runs over every buffered frame including I0.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    head = frames[0]
    now = head.arrival_us if now is None else now
    ladder = ladder_of(head)
    r_max = ladder[-1]
    locals_ = local_models(models)
    limit = head.arrival_us + env.deadline_us

    best_score = NEG_INF
    pick = None
    for m in server_models(models):
        for r in reversed(ladder):
            size = head.size(r)
            tx = tx_time_us(size, env.bandwidth)
            if now + tx + m.server_us + env.rtt_us > limit:
                continue
            score = offload_score(env.bandwidth, size, alpha, m.accuracy(r))
            if score > best_score + UTIL_EPS:
                best_score, pick = score, (m, r, tx)

    if pick is None:
        window = buffered(frames, now)
        final, decisions, _ = _local_utility_schedule(
            window, locals_, env, alpha, npu_free_at, head.arrival_us, r_max, len(window)
        )
        acc_sum = sum(d.accuracy for d in decisions)
        return RoundPlan(decisions, acc_sum, final.u, len(window))

    m, r, tx = pick
    a = m.accuracy(r)
    decisions = [ScheduleDecision(head.index, Placement.OFFLOAD, m.model_id, r, a)]
    n_l = min(tx // env.gamma_us, len(frames) - 1)
    local_u = 0.0
    if n_l:
        final, local_dec, _ = _local_utility_schedule(
            frames[1 : 1 + n_l], locals_, env, alpha, npu_free_at, head.arrival_us, r_max, n_l
        )
        local_u = final.u
        decisions += local_dec
    acc_sum = sum(d.accuracy for d in decisions)
    return RoundPlan(decisions, acc_sum, best_score + local_u, n_l)


def round_utility(plan: RoundPlan | Sequence[ScheduleDecision], env: EnvProfile, alpha: float) -> float:
    """Frame rate achieved over the plan's frames plus alpha times mean accuracy."""
    decisions = plan.decisions if isinstance(plan, RoundPlan) else plan
    n = len(decisions)
    done = [d for d in decisions if d.processed]
    if not done:
        return 0.0
    acc = 0.0
    for d in done:
        acc += d.accuracy
    return len(done) * env.frame_rate_fps / n + alpha * acc / len(done)
