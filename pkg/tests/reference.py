"""Slow, obviously-correct reference implementations used as test oracles."""

import itertools
import math


def run_npu(arrivals, t_init, durations, choices):
    """Finish time per frame for a sequential NPU (None where the choice is -1)."""
    t = t_init
    out = []
    for a, j in zip(arrivals, choices):
        if j < 0:
            out.append(None)
            continue
        t = max(t, a) + durations[j]
        out.append(t)
    return out


def local_acc_bruteforce(arrivals, deadline, t_init, durations, accuracies):
    """Best accuracy sum when a frame may be skipped only if no model can meet
    its deadline from the current NPU state."""
    best = -math.inf

    def rec(k, t, s):
        nonlocal best
        if k == len(arrivals):
            best = max(best, s)
            return
        a = arrivals[k]
        moved = False
        for d, acc in zip(durations, accuracies):
            f = max(t, a) + d
            if f <= a + deadline:
                moved = True
                rec(k + 1, f, s + acc)
        if not moved:
            rec(k + 1, t, s)

    rec(0, t_init, 0.0)
    return best


def utility_value(m, acc_sum, alpha, fps, n_norm):
    return 0.0 if m == 0 else m * fps / n_norm + alpha * acc_sum / m


def local_utility_bruteforce(arrivals, deadline, t_init, durations, accuracies, alpha, fps, n_norm):
    """Best utility over every per-frame choice of model or skip in which each
    processed frame meets its deadline."""
    best = -math.inf
    for choice in itertools.product(range(-1, len(durations)), repeat=len(arrivals)):
        fin = run_npu(arrivals, t_init, durations, choice)
        if any(f is not None and f > a + deadline for f, a in zip(fin, arrivals)):
            continue
        done = [accuracies[j] for j in choice if j >= 0]
        best = max(best, utility_value(len(done), sum(done), alpha, fps, n_norm))
    return best


def simulate(frames, env, assignment, rates=None, uplink0=0, npu0=0):
    """Score a full assignment [(kind, model, resolution) | None] by executing it
    on a serial uplink and a serial NPU. Returns (count, accuracy_sum)."""
    rates = rates or [(0, env.bandwidth)]
    up, npu = uplink0, npu0
    count, acc = 0, 0.0
    for f, opt in zip(frames, assignment):
        if opt is None:
            continue
        kind, m, r = opt
        dl = f.arrival_us + env.deadline_us
        if kind == "offload":
            start = max(up, f.arrival_us)
            if start > dl:
                continue
            rate = [b for t, b in rates if t <= start][-1]
            tx = (f.size(r) * 1_000_000 + rate - 1) // rate
            up = start + tx
            finish = start + tx + m.server_us + env.rtt_us
            a = m.accuracy(r)
        else:
            start = max(npu, f.arrival_us)
            if start > dl:
                continue
            finish = start + m.npu_us
            npu = finish
            a = m.local_accuracy()
        if finish <= dl:
            count += 1
            acc += a
    return count, acc


def oracle_bruteforce(frames, models, env, objective, alpha=0.0, rates=None):
    options = [None]
    for m in models:
        if m.remote:
            options += [("offload", m, r) for r in sorted(m.accuracy_by_resolution)]
        if m.local:
            options.append(("local", m, max(frames[0].size_bits_by_resolution)))
    n = len(frames)
    best = -math.inf
    for assignment in itertools.product(options, repeat=n):
        count, acc = simulate(frames, env, assignment, rates)
        if objective == "accuracy":
            v = acc
        else:
            v = utility_value(count, acc, alpha, env.frame_rate_fps, n)
        best = max(best, v)
    return best / n if objective == "accuracy" else best
