# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Same contract as ``_pykernels``; see the docstrings there."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

ctypedef cnp.int64_t i64
ctypedef cnp.int32_t i32

cdef double ACC_EPS = 1e-12
cdef int OPT_OFFLOAD = 0
cdef int OPT_LOCAL = 1


cdef inline i64 ceil_div(i64 a, i64 b) nogil:
    return -((-a) // b)


def acc_dp(arrivals, i64 deadline, i64 t_init, durations, accuracies, i64 grid):
    cdef i64[::1] arr = np.ascontiguousarray(arrivals, dtype=np.int64)
    cdef i64[::1] durs = np.ascontiguousarray(durations, dtype=np.int64)
    cdef double[::1] accs = np.ascontiguousarray(accuracies, dtype=np.float64)
    cdef Py_ssize_t n = arr.shape[0]
    cdef Py_ssize_t n_models = durs.shape[0]
    cdef Py_ssize_t width = deadline // grid + 2

    offsets_np = np.empty(n + 1, dtype=np.int64)
    values_np = np.full((n + 1, width), -np.inf)
    times_np = np.zeros((n + 1, width), dtype=np.int64)
    pcell_np = np.full((n + 1, width), -1, dtype=np.int32)
    pmodel_np = np.full((n + 1, width), -1, dtype=np.int32)
    cdef i64[::1] offsets = offsets_np
    cdef double[:, ::1] values = values_np
    cdef i64[:, ::1] times = times_np
    cdef i32[:, ::1] pcell = pcell_np
    cdef i32[:, ::1] pmodel = pmodel_np

    cdef Py_ssize_t k, c, j, cell
    cdef i64 a, dl, off, s, f
    cdef double v, nv, cur
    cdef bint reached

    offsets[0] = t_init // grid
    values[0, 0] = 0.0
    times[0, 0] = t_init

    with nogil:
        for k in range(1, n + 1):
            a = arr[k - 1]
            dl = a + deadline
            off = a // grid
            reached = False
            for c in range(width):
                v = values[k - 1, c]
                if v == -INFINITY:
                    continue
                s = times[k - 1, c]
                if s < a:
                    s = a
                for j in range(n_models):
                    f = s + durs[j]
                    if f > dl:
                        continue
                    cell = <Py_ssize_t>(f // grid - off)
                    nv = v + accs[j]
                    cur = values[k, cell]
                    if nv > cur + ACC_EPS or (
                        nv >= cur - ACC_EPS
                        and (j < pmodel[k, cell] or (j == pmodel[k, cell] and f < times[k, cell]))
                    ):
                        values[k, cell] = nv
                        times[k, cell] = f
                        pcell[k, cell] = <i32>c
                        pmodel[k, cell] = <i32>j
                        reached = True
            if reached:
                offsets[k] = off
            else:
                offsets[k] = offsets[k - 1]
                for c in range(width):
                    values[k, c] = values[k - 1, c]
                    times[k, c] = times[k - 1, c]
                    pmodel[k, c] = -1
                    pcell[k, c] = <i32>c if values[k - 1, c] != -INFINITY else -1
    return offsets_np, values_np, times_np, pcell_np, pmodel_np


cdef class _Search:
    cdef Py_ssize_t n, n_opt, n_bw
    cdef i64[::1] arrivals
    cdef i64[:, ::1] sizes
    cdef i64[::1] bw_times
    cdef i64[::1] bw_rates
    cdef i64[::1] kind
    cdef i64[::1] res_idx
    cdef i64[::1] dur
    cdef double[::1] acc
    cdef double[::1] suffix_sum
    cdef double[::1] suffix_max
    cdef i64[::1] choice
    cdef i64[::1] best_choice
    cdef i64 deadline, rtt
    cdef int objective
    cdef double alpha, fps, eps, best
    cdef bint have_best

    cdef inline i64 rate_at(self, i64 t) nogil:
        cdef Py_ssize_t i = 0
        while i + 1 < self.n_bw and self.bw_times[i + 1] <= t:
            i += 1
        return self.bw_rates[i]

    cdef inline double utility(self, i64 cnt, double s) nogil:
        if cnt == 0:
            return 0.0
        return cnt * self.fps / self.n + self.alpha * s / cnt

    cdef double bound(self, Py_ssize_t i, i64 cnt, double s) nogil:
        cdef double b, u, top
        cdef Py_ssize_t k
        if self.objective == 0:
            return s + self.suffix_sum[i]
        top = self.suffix_max[i]
        b = self.utility(cnt, s)
        for k in range(1, self.n - i + 1):
            u = self.utility(cnt + k, s + k * top)
            if u > b:
                b = u
        return b

    cdef void rec(self, Py_ssize_t i, i64 up, i64 npu, i64 cnt, double s) nogil:
        cdef double val
        cdef Py_ssize_t o, q
        cdef i64 a, dl, st, tx, f, kd
        if i == self.n:
            if self.objective == 0:
                val = s
            else:
                val = self.utility(cnt, s)
            if (not self.have_best) or val > self.best + self.eps:
                self.best = val
                self.have_best = True
                for q in range(self.n):
                    self.best_choice[q] = self.choice[q]
            return
        if self.have_best and self.bound(i, cnt, s) <= self.best + self.eps:
            return
        a = self.arrivals[i]
        dl = a + self.deadline
        for o in range(self.n_opt):
            kd = self.kind[o]
            if kd == OPT_OFFLOAD:
                st = up if up > a else a
                if st > dl:
                    continue
                tx = ceil_div(self.sizes[i, self.res_idx[o]] * 1000000, self.rate_at(st))
                if st + tx + self.dur[o] + self.rtt > dl:
                    continue
                self.choice[i] = o
                self.rec(i + 1, st + tx, npu, cnt + 1, s + self.acc[o])
            elif kd == OPT_LOCAL:
                st = npu if npu > a else a
                f = st + self.dur[o]
                if f > dl:
                    continue
                self.choice[i] = o
                self.rec(i + 1, up, f, cnt + 1, s + self.acc[o])
            else:
                self.choice[i] = o
                self.rec(i + 1, up, npu, cnt, s)


def oracle_search(
    arrivals, i64 deadline, i64 uplink0, i64 npu0, sizes, bw_times, bw_rates, i64 rtt,
    kind, res_idx, dur, acc, int objective, double alpha, double fps,
):
    cdef _Search S = _Search()
    cdef Py_ssize_t i, o
    cdef i64 t, max_rate
    cdef double b
    S.arrivals = np.ascontiguousarray(arrivals, dtype=np.int64)
    S.n = S.arrivals.shape[0]
    S.sizes = np.ascontiguousarray(np.asarray(sizes, dtype=np.int64).reshape(S.n, -1))
    S.bw_times = np.ascontiguousarray(bw_times, dtype=np.int64)
    S.bw_rates = np.ascontiguousarray(bw_rates, dtype=np.int64)
    S.n_bw = S.bw_times.shape[0]
    S.kind = np.ascontiguousarray(kind, dtype=np.int64)
    S.res_idx = np.ascontiguousarray(res_idx, dtype=np.int64)
    S.dur = np.ascontiguousarray(dur, dtype=np.int64)
    S.acc = np.ascontiguousarray(acc, dtype=np.float64)
    S.n_opt = S.kind.shape[0]
    S.deadline = deadline
    S.rtt = rtt
    S.objective = objective
    S.alpha = alpha
    S.fps = fps
    S.eps = ACC_EPS if objective == 0 else 1e-9
    S.have_best = False
    S.best = -INFINITY
    S.choice = np.zeros(S.n, dtype=np.int64)
    S.best_choice = np.zeros(S.n, dtype=np.int64)

    max_rate = max(int(x) for x in bw_rates)
    opt_best = np.zeros(S.n, dtype=np.float64)
    for i in range(S.n):
        b = 0.0
        for o in range(S.n_opt):
            if S.kind[o] == OPT_OFFLOAD:
                t = ceil_div(S.sizes[i, S.res_idx[o]] * 1000000, max_rate) + S.dur[o] + rtt
            elif S.kind[o] == OPT_LOCAL:
                t = S.dur[o]
            else:
                continue
            if t <= deadline and S.acc[o] > b:
                b = S.acc[o]
        opt_best[i] = b
    suffix_sum = np.zeros(S.n + 1, dtype=np.float64)
    suffix_max = np.zeros(S.n + 1, dtype=np.float64)
    for i in range(S.n - 1, -1, -1):
        suffix_sum[i] = suffix_sum[i + 1] + opt_best[i]
        suffix_max[i] = max(suffix_max[i + 1], opt_best[i])
    S.suffix_sum = suffix_sum
    S.suffix_max = suffix_max

    with nogil:
        S.rec(0, uplink0, npu0, 0, 0.0)
    if not S.have_best:
        return -np.inf, None
    return S.best, [int(x) for x in S.best_choice]
