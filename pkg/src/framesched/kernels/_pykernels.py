"""Pure-Python kernels. Same contract as the compiled ``_ckernels`` module."""

from __future__ import annotations

from bisect import bisect_right

import numpy as np

NEG_INF = float("-inf")
ACC_EPS = 1e-12

OPT_OFFLOAD = 0
OPT_LOCAL = 1
OPT_SKIP = 2


def acc_dp(arrivals, deadline, t_init, durations, accuracies, grid):
    """Fill the banded max-accuracy table for frames processed in order on one NPU.

    Row ``k`` holds, per time cell, the best accuracy sum for frames 1..k and
    the exact completion time of frame k that achieves it. Frame k (arriving
    at ``arrivals[k-1]``) starts at ``max(prev_completion, arrival)`` and must
    finish by ``arrival + deadline``. A row with no reachable state copies the
    previous row (the frame is skipped).

    Returns ``(offsets, values, times, parent_cell, parent_model)``; row ``k``
    cell ``c`` stands for time cell ``offsets[k] + c``.
    """
    n = len(arrivals)
    n_models = len(durations)
    width = deadline // grid + 2
    offsets = np.empty(n + 1, dtype=np.int64)
    values = np.full((n + 1, width), NEG_INF)
    times = np.zeros((n + 1, width), dtype=np.int64)
    pcell = np.full((n + 1, width), -1, dtype=np.int32)
    pmodel = np.full((n + 1, width), -1, dtype=np.int32)

    offsets[0] = t_init // grid
    values[0, 0] = 0.0
    times[0, 0] = t_init

    durs = [int(d) for d in durations]
    accs = [float(a) for a in accuracies]
    prev_v = values[0].tolist()
    prev_t = times[0].tolist()
    for k in range(1, n + 1):
        a = int(arrivals[k - 1])
        dl = a + deadline
        off = a // grid
        row_v = [NEG_INF] * width
        row_t = [0] * width
        row_c = [-1] * width
        row_m = [-1] * width
        reached = False
        for c in range(width):
            v = prev_v[c]
            if v == NEG_INF:
                continue
            s = prev_t[c]
            if s < a:
                s = a
            for j in range(n_models):
                f = s + durs[j]
                if f > dl:
                    continue
                cell = f // grid - off
                nv = v + accs[j]
                cur = row_v[cell]
                if nv > cur + ACC_EPS or (
                    nv >= cur - ACC_EPS
                    and (j < row_m[cell] or (j == row_m[cell] and f < row_t[cell]))
                ):
                    row_v[cell] = nv
                    row_t[cell] = f
                    row_c[cell] = c
                    row_m[cell] = j
                    reached = True
        if reached:
            offsets[k] = off
        else:
            offsets[k] = offsets[k - 1]
            row_v = list(prev_v)
            row_t = list(prev_t)
            row_c = [c if prev_v[c] != NEG_INF else -1 for c in range(width)]
            row_m = [-1] * width
        values[k] = row_v
        times[k] = row_t
        pcell[k] = row_c
        pmodel[k] = row_m
        prev_v, prev_t = row_v, row_t
    return offsets, values, times, pcell, pmodel


def _rate_at(bw_times, bw_rates, t):
    i = bisect_right(bw_times, t) - 1
    return bw_rates[i if i >= 0 else 0]


def oracle_search(
    arrivals, deadline, uplink0, npu0, sizes, bw_times, bw_rates, rtt,
    kind, res_idx, dur, acc, objective, alpha, fps,
):
    """Exact search over per-frame options with branch-and-bound.

    Options are tried in the given order and a new incumbent must beat the
    old one by more than a tolerance, so the result is the first optimal
    assignment in lexicographic option order. Options that would miss the
    deadline are never expanded: they score nothing and hold a resource
    longer than skipping would.

    ``objective`` 0 maximises the accuracy sum; 1 maximises
    ``count * fps / n + alpha * accuracy_sum / count``.
    Returns ``(best_value, choice)`` with ``choice[i]`` an option index.
    """
    n = len(arrivals)
    n_opt = len(kind)
    arrivals = [int(x) for x in arrivals]
    sizes = [[int(x) for x in row] for row in sizes]
    bw_times = [int(x) for x in bw_times]
    bw_rates = [int(x) for x in bw_rates]
    kind = [int(x) for x in kind]
    res_idx = [int(x) for x in res_idx]
    dur = [int(x) for x in dur]
    acc = [float(x) for x in acc]
    max_rate = max(bw_rates)

    # Optimistic per-frame accuracy: best option meeting the deadline from idle
    # resources at the fastest rate in the schedule.
    opt_best = []
    for i in range(n):
        b = 0.0
        for o in range(n_opt):
            if kind[o] == OPT_OFFLOAD:
                t = -(-sizes[i][res_idx[o]] * 1_000_000 // max_rate) + dur[o] + rtt
            elif kind[o] == OPT_LOCAL:
                t = dur[o]
            else:
                continue
            if t <= deadline and acc[o] > b:
                b = acc[o]
        opt_best.append(b)
    suffix_sum = [0.0] * (n + 1)
    suffix_max = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix_sum[i] = suffix_sum[i + 1] + opt_best[i]
        suffix_max[i] = max(suffix_max[i + 1], opt_best[i])

    eps = ACC_EPS if objective == 0 else 1e-9
    best = [NEG_INF]
    best_choice = [None]
    choice = [0] * n

    def utility(cnt, s):
        if cnt == 0:
            return 0.0
        return cnt * fps / n + alpha * s / cnt

    def bound(i, cnt, s):
        if objective == 0:
            return s + suffix_sum[i]
        top = suffix_max[i]
        b = utility(cnt, s)
        for k in range(1, n - i + 1):
            u = utility(cnt + k, s + k * top)
            if u > b:
                b = u
        return b

    def rec(i, up, npu, cnt, s):
        if i == n:
            val = s if objective == 0 else utility(cnt, s)
            if val > best[0] + eps:
                best[0] = val
                best_choice[0] = list(choice)
            return
        if best[0] != NEG_INF and bound(i, cnt, s) <= best[0] + eps:
            return
        a = arrivals[i]
        dl = a + deadline
        for o in range(n_opt):
            k = kind[o]
            if k == OPT_OFFLOAD:
                st = up if up > a else a
                if st > dl:
                    continue
                rate = _rate_at(bw_times, bw_rates, st)
                tx = -(-sizes[i][res_idx[o]] * 1_000_000 // rate)
                if st + tx + dur[o] + rtt > dl:
                    continue
                choice[i] = o
                rec(i + 1, st + tx, npu, cnt + 1, s + acc[o])
            elif k == OPT_LOCAL:
                st = npu if npu > a else a
                f = st + dur[o]
                if f > dl:
                    continue
                choice[i] = o
                rec(i + 1, up, f, cnt + 1, s + acc[o])
            else:
                choice[i] = o
                rec(i + 1, up, npu, cnt, s)

    rec(0, int(uplink0), int(npu0), 0, 0.0)
    return best[0], best_choice[0]
