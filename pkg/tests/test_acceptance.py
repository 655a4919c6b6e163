"""Acceptance suite. Each test records one PASS/FAIL line, printed in the
terminal summary at the end of the run."""

import csv
import random
import time

import pytest

from framesched.baselines import PolicyId, offload_policy
from framesched.cli import SweepSpec, run_sweep
from framesched.profiles import EnvProfile, FrameSource, ModelProfile, tx_time_us
from framesched.sched import (
    Placement,
    ScheduleDecision,
    acc_dp_fill,
    backtrack_acc_dp,
    backtrack_triples,
    best_server_model,
    max_accuracy_round,
    round_utility,
    utility_dp,
)
from framesched.sim import SimConfig, check_schedule, compare_with_oracle, random_instance, run

from conftest import make_env, make_frames
from reference import run_npu, utility_value

BANDWIDTH_AXIS = [0.5 * k for k in range(1, 11)]
FPS_AXIS = [10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0]
TC_AXIS = [50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 350.0, 400.0]
FOUR = [PolicyId.LOCAL, PolicyId.OFFLOAD, PolicyId.MAX_ACCURACY, PolicyId.DEEPDECISION]


@pytest.fixture
def record(request):
    def _record(number, title, ok, detail):
        line = f"criterion {number} {title}: {'PASS' if ok else 'FAIL'} ({detail})"
        request.config.acceptance_lines.append(line)
        print(line)
        return ok

    return _record


def _sweep_table(base, axis, values, policies, tmp_path):
    path = run_sweep(SweepSpec(base, axis, tuple(values), tuple(policies)), tmp_path)[0]
    table = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            table[(float(row["axis_value"]), row["policy"])] = row
    return table


def _col(table, values, policy, key):
    return [float(table[(v, policy.value)][key]) for v in values]


def _non_decreasing(xs, tol=0.0):
    return all(b >= a - tol for a, b in zip(xs, xs[1:]))


# 1 -----------------------------------------------------------------------------------


def test_oracle_soundness(base_config, record):
    small = base_config.with_ladder([45, 134, 224])
    rng = random.Random(2024)
    t0 = time.perf_counter()
    gaps = []
    for i in range(500):
        env, frames = random_instance(rng, small, rng.randint(1, 8))
        gaps.append(compare_with_oracle(env, frames, small.models, 50.0, instance=i))
    elapsed = time.perf_counter() - t0
    violations = sum(g.accuracy_gap < -1e-9 or g.utility_gap < -1e-9 for g in gaps)
    mean_gap = sum(g.accuracy_gap for g in gaps) / len(gaps)
    ok = violations == 0 and mean_gap <= 0.02 and elapsed <= 60
    record(1, "oracle soundness", ok,
           f"500 instances, {violations} violations at tol 1e-9, mean accuracy gap {mean_gap:.4f} <= 0.02, "
           f"{elapsed:.1f} s <= 60 s")
    assert ok


# 2 -----------------------------------------------------------------------------------


def _fuzz_config(rng, policy):
    models = []
    for i in range(rng.randint(1, 2)):
        accs = sorted(rng.randint(5, 95) / 100 for _ in range(5))
        npu = float(rng.randint(5, 120)) if rng.random() < 0.85 else None
        server = float(rng.randint(5, 120)) if npu is None or rng.random() < 0.85 else None
        models.append(ModelProfile(i, f"m{i}", npu, server, dict(zip((45, 90, 134, 179, 224), accs)),
                                   rng.randint(5, 95) / 100))
    env = EnvProfile(rng.randint(100, 8000) * 1000.0, float(rng.randint(0, 300)),
                     float(rng.randint(5, 60)), float(rng.randint(40, 400)))
    source = FrameSource(bits_per_pixel=rng.choice([1.0, 4.0, 8.0]), jitter_fraction=rng.choice([0.0, 0.2, 0.5]),
                         rng_seed=rng.randrange(2**31))
    trace = None
    if rng.random() < 0.3:
        trace = tuple((float(t), rng.randint(100, 8000) * 1000.0) for t in (0, 300, 700))
    exhaustive = policy in (PolicyId.OPTIMAL_ACCURACY, PolicyId.OPTIMAL_UTILITY)
    n = rng.randint(1, 5) if exhaustive else rng.randint(1, 40)
    return SimConfig(env, tuple(models), source, policy, alpha=rng.choice([0.0, 10.0, 50.0, 200.0]),
                     n_frames=n, bandwidth_trace=trace, objective=rng.choice(["accuracy", "utility"]),
                     window_ms=rng.choice([200.0, 1000.0]))


def test_deadline_soundness(record):
    rng = random.Random(7)
    t0 = time.perf_counter()
    failures = []
    runs = 0
    for i in range(1000):
        seed = rng.randrange(2**31)
        for policy in PolicyId:
            cfg = _fuzz_config(random.Random(seed), policy)
            report = run(cfg)
            runs += 1
            verdict = check_schedule(report.outcomes, cfg.env, cfg.models, report.frames, cfg.bandwidth_trace)
            if not verdict:
                failures.append((i, policy.value, verdict.message))
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed <= 120
    record(2, "deadline soundness", ok,
           f"1000 configs x 7 policies = {runs} reports, {len(failures)} checker errors, {elapsed:.1f} s <= 120 s")
    assert ok, failures[:5]


# 3 -----------------------------------------------------------------------------------


def test_dp_invariants(record):
    rng = random.Random(99)
    non_monotone = dominated = mismatched = 0
    for _ in range(100):
        n_models = rng.randint(1, 3)
        models = [ModelProfile(j, f"m{j}", float(rng.randint(5, 90)), None, {224: 0.5}, rng.randint(5, 95) / 100)
                  for j in range(n_models)]
        env = make_env(fps=float(rng.randint(10, 60)), deadline_ms=float(rng.randint(60, 300)))
        n_l, t_idle = rng.randint(0, 8), rng.randint(0, 100) * 1000
        table = acc_dp_fill(n_l, models, env, t_idle)
        non_monotone += sum(any(a > b for a, b in zip(row, row[1:])) for row in table.h)

        arrivals = [env.gamma_us * (k + 1) for k in range(n_l)]
        durs = [m.npu_us for m in models]
        accs = [m.local_accuracy() for m in models]
        value, choices, finishes = backtrack_acc_dp(table.rows)
        replay = sum(accs[j] for j in choices if j >= 0)
        if finishes != run_npu(arrivals, t_idle, durs, choices) or abs(replay - value) > 1e-9 * max(1.0, abs(value)):
            mismatched += 1

        alpha = rng.choice([0.0, 10.0, 50.0, 200.0])
        levels = utility_dp(arrivals, env.deadline_us, t_idle, durs, accs, alpha, env.frame_rate_fps, max(n_l, 1))
        for level in levels:
            dominated += sum(not (x.t < y.t and x.u < y.u) for x, y in zip(level, level[1:]))
        final = levels[-1][-1]
        ch = backtrack_triples(final, n_l)
        done = [accs[j] for j in ch if j >= 0]
        u = utility_value(len(done), sum(done), alpha, env.frame_rate_fps, max(n_l, 1))
        fin = run_npu(arrivals, t_idle, durs, ch)
        late = any(f is not None and f > a + env.deadline_us for f, a in zip(fin, arrivals))
        if late or abs(u - final.u) > 1e-9 * max(1.0, abs(final.u)):
            mismatched += 1
    ok = non_monotone == dominated == mismatched == 0
    record(3, "DP invariants", ok,
           f"100 profiles: {non_monotone} non-monotone H rows, {dominated} dominated triples, "
           f"{mismatched} backtrack mismatches at 1e-9 relative")
    assert ok


# 4 -----------------------------------------------------------------------------------


def test_local_network_invariance(base_config, record):
    reports = []
    for b in (0.5e6, 2e6, 5e6):
        for tc in (50.0, 400.0):
            cfg = base_config.with_(policy=PolicyId.LOCAL, env=base_config.env.with_(bandwidth_bps=b, rtt_delay_ms=tc))
            r = run(cfg)
            reports.append((r.outcomes, r.avg_accuracy, r.achieved_fps, r.utility, r.miss_count))
    ok = all(r == reports[0] for r in reports)
    record(4, "Local network invariance", ok, "B in {0.5, 2, 5} Mbps x T_c in {50, 400} ms, identical reports")
    assert ok


# 5 -----------------------------------------------------------------------------------


def test_trends(base_config, record, tmp_path):
    t0 = time.perf_counter()
    problems = []
    base = base_config.with_(env=base_config.env.with_(rtt_delay_ms=100.0, deadline_ms=200.0))

    # (a) + (b) on the bandwidth axis at 30 and 50 fps
    for fps in (30.0, 50.0):
        cfg = base.with_(env=base.env.with_(frame_rate_fps=fps))
        t = _sweep_table(cfg, "bandwidth", BANDWIDTH_AXIS, FOUR, tmp_path / f"b{fps:g}")
        off = _col(t, BANDWIDTH_AXIS, PolicyId.OFFLOAD, "avg_accuracy")
        loc = _col(t, BANDWIDTH_AXIS, PolicyId.LOCAL, "avg_accuracy")
        if not _non_decreasing(off):
            problems.append(f"(a) Offload not non-decreasing in B at {fps:g} fps")
        if not off[0] < loc[0]:
            problems.append(f"(a) Offload not below Local at 0.5 Mbps, {fps:g} fps")
        problems += _dominance(t, BANDWIDTH_AXIS, f"B axis at {fps:g} fps")

    # (b) on the frame-rate axis at 2 and 3 Mbps
    for b in (2.0, 3.0):
        cfg = base.with_(env=base.env.with_(bandwidth_bps=b * 1e6))
        t = _sweep_table(cfg, "frame_rate", FPS_AXIS, FOUR, tmp_path / f"f{b:g}")
        problems += _dominance(t, FPS_AXIS, f"fps axis at {b:g} Mbps")

    # (c) upload delay at 3 Mbps
    cfg = base.with_(env=base.env.with_(bandwidth_bps=3e6))
    offload_capable = [PolicyId.OFFLOAD, PolicyId.DEEPDECISION, PolicyId.MAX_ACCURACY]
    t = _sweep_table(cfg, "upload_delay", TC_AXIS, offload_capable, tmp_path / "tc")
    for p in offload_capable:
        if not _non_decreasing(_col(t, TC_AXIS, p, "avg_accuracy")[::-1]):
            problems.append(f"(c) {p.value} accuracy increases with T_c")

    # (d) utility vs frame rate, alpha = 50
    cfg = base.with_(alpha=50.0, env=base.env.with_(bandwidth_bps=2.5e6))
    t = _sweep_table(cfg, "frame_rate", FPS_AXIS, [PolicyId.MAX_UTILITY], tmp_path / "u")
    if not _non_decreasing(_col(t, FPS_AXIS, PolicyId.MAX_UTILITY, "utility")):
        problems.append("(d) MaxUtility utility decreases with frame rate")

    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed <= 120
    record(5, "trend suite", ok,
           f"(a)-(d) {'all hold' if not problems else '; '.join(problems)}, dominance tol 1e-9, "
           f"{elapsed:.1f} s <= 120 s")
    assert ok, problems


def _dominance(table, values, where):
    out = []
    for v in values:
        ma = float(table[(v, PolicyId.MAX_ACCURACY.value)]["avg_accuracy"])
        best = max(float(table[(v, p.value)]["avg_accuracy"]) for p in FOUR if p is not PolicyId.MAX_ACCURACY)
        if ma < best - 1e-9:
            out.append(f"(b) MaxAccuracy {ma:.4f} < {best:.4f} at {v:g} on {where}")
    return out


# 6 -----------------------------------------------------------------------------------


def test_unit_arithmetic(models, record):
    checks = {}
    env30 = make_env()
    two = [ScheduleDecision(0, Placement.LOCAL, 0, 224, 0.52), ScheduleDecision(1, Placement.OFFLOAD, 0, 224, 0.67)]
    checks["utility 59.75"] = round_utility(two, env30, 50.0) == 59.75

    env = EnvProfile(2_007_040.0, 100.0, 30.0, 200.0)
    head = make_frames(env, 1)[0]
    tx = tx_time_us(head.size(224), env.bandwidth)
    by_name = {m.name: m for m in models}
    checks["100 ms upload at 224 px"] = tx == 100_000
    checks["ResNet 269 ms"] = tx + by_name["ResNet-50"].server_us + env.rtt_us == 269_000
    checks["SqueezeNet 209 ms"] = tx + by_name["SqueezeNet"].server_us + env.rtt_us == 209_000
    checks["no server model at 224 px"] = best_server_model(models, 224, tx, 0, head, env) is None
    plan = max_accuracy_round(make_frames(env, 10), models, env, 0)
    checks["lower resolution tried"] = plan.decisions[0].resolution < 224

    env2 = make_env(bandwidth_mbps=2.0)
    frames = make_frames(env2, 5)
    checks["budget 66,667 bits"] = round(env2.bandwidth_bps / env2.frame_rate_fps) == 66_667
    checks["Offload picks 90 px"] = {d.resolution for d in offload_policy(frames, models, env2)} == {90}
    checks["n_l at 224 px"] = tx_time_us(frames[0].size(224), env2.bandwidth) // env2.gamma_us == 3
    checks["buffered finishes 85,333 / 137,333"] = backtrack_acc_dp(acc_dp_fill(2, models, env30, 0).rows)[2] == [
        85_333, 137_333]
    failed = [k for k, v in checks.items() if not v]
    ok = not failed
    record(6, "unit arithmetic", ok, f"{len(checks) - len(failed)}/{len(checks)} exact checks"
           + (f", failed: {', '.join(failed)}" if failed else ""))
    assert ok


# 7 -----------------------------------------------------------------------------------


def _sweep_suite(base, out, workers):
    b = base.with_(source=FrameSource(jitter_fraction=0.2, rng_seed=31))
    specs = [
        SweepSpec(b, "bandwidth", tuple(BANDWIDTH_AXIS), tuple(FOUR)),
        SweepSpec(b.with_(env=b.env.with_(bandwidth_bps=3e6)), "frame_rate", tuple(FPS_AXIS), tuple(FOUR)),
        SweepSpec(b.with_(env=b.env.with_(bandwidth_bps=3e6)), "upload_delay", tuple(TC_AXIS), tuple(FOUR)),
        SweepSpec(b, "frame_rate", tuple(FPS_AXIS), (PolicyId.MAX_UTILITY, PolicyId.DEEPDECISION, PolicyId.LOCAL),
                  nested_axis="alpha", nested_values=(50.0, 200.0)),
    ]
    paths = []
    for k, spec in enumerate(specs):
        paths += run_sweep(spec, out / str(k), workers=workers)
    return paths


def test_determinism(base_config, record, tmp_path):
    base = base_config.with_(n_frames=120)
    a = _sweep_suite(base, tmp_path / "a", workers=1)
    b = _sweep_suite(base, tmp_path / "b", workers=2)
    same = [pa.read_bytes() == pb.read_bytes() for pa, pb in zip(a, b)]
    ok = len(a) == len(b) == 5 and all(same)
    record(7, "determinism", ok, f"{sum(same)}/{len(a)} sweep CSVs byte-identical across two runs")
    assert ok
