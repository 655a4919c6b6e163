import random

import numpy as np
import pytest

from framesched import kernels

pytestmark = pytest.mark.skipif(kernels.compiled_backend is None, reason="compiled kernels not built")
py, cy = kernels.python_backend, kernels.compiled_backend


@pytest.mark.parametrize("seed", range(25))
def test_acc_dp_backends_agree(seed):
    rng = random.Random(seed)
    n = rng.randint(0, 12)
    gamma = rng.choice([20_000, 33_333])
    arrivals = np.arange(1, n + 1, dtype=np.int64) * gamma
    durs = [rng.randrange(3, 80) * 1000 + rng.choice([0, 500]) for _ in range(rng.randint(1, 3))]
    accs = [rng.uniform(0, 1) for _ in durs]
    args = (arrivals, rng.choice([80_000, 200_000]), rng.randrange(0, 60_000), durs, accs, rng.choice([1000, 500]))
    for a, b in zip(py.acc_dp(*args), cy.acc_dp(*args)):
        np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("seed", range(25))
@pytest.mark.parametrize("objective", [0, 1])
def test_oracle_backends_agree(seed, objective):
    rng = random.Random(seed)
    n = rng.randint(1, 6)
    gamma = rng.choice([20_000, 33_333])
    arrivals = np.arange(n, dtype=np.int64) * gamma
    sizes = np.array([[8100, 71824, 200704]] * n, dtype=np.int64)
    bw_times = np.array([0, 60_000], dtype=np.int64)
    bw_rates = np.array([rng.randrange(500_000, 5_000_000), rng.randrange(500_000, 5_000_000)], dtype=np.int64)
    kind = [0, 0, 0, 0, 0, 0, 1, 1, 2]
    res = [2, 1, 0, 2, 1, 0, 0, 0, 0]
    dur = [69_000] * 3 + [9_000] * 3 + [52_000, 17_000, 0]
    acc = [0.67, 0.62, 0.25, 0.51, 0.46, 0.16, 0.52, 0.41, 0.0]
    args = (arrivals, 200_000, 0, rng.randrange(0, 40_000), sizes, bw_times, bw_rates,
            rng.randrange(20_000, 200_000), kind, res, dur, acc, objective, 50.0, 1e6 / gamma)
    assert py.oracle_search(*args) == cy.oracle_search(*args)


def test_backend_selection():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.acc_dp is (cy.acc_dp if kernels.BACKEND == "cython" else py.acc_dp)
