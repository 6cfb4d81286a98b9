"""Branch-and-bound optimum against an independent MILP solve of the same model."""

import random

import numpy as np
import pytest

import mixq

milp = pytest.importorskip("scipy.optimize").milp
from scipy.optimize import Bounds, LinearConstraint  # noqa: E402


def random_problem(rng, layers, bit_set):
    p = mixq.AllocationProblem()
    p.layer_ids = list(range(1, layers + 1))
    p.bit_set = bit_set
    omega = [rng.random() for _ in range(layers)]
    p.omega = [o / sum(omega) for o in omega]
    p.s_hat = [rng.uniform(0.0, 10.0) for _ in range(layers - 1)]
    p.w_count = [rng.choice([0, rng.randint(1, 1000)]) for _ in range(layers)]
    p.macs = [rng.randint(1, 5000) for _ in range(layers)]
    t = rng.choice(bit_set[1:])
    p.size_budget = sum(w * t for w in p.w_count)
    p.bitops_budget = sum(m * t * t for m in p.macs)
    p.lambda_ = rng.choice([0.0, 0.01, 0.1, 1.0])
    return p


def milp_optimum(p):
    L, K = len(p.omega), len(p.bit_set)
    n_a, n_d = L * K, 2 * (L - 1)
    b = np.array(p.bit_set, dtype=float)
    c = np.zeros(n_a + n_d)
    for l in range(L):
        c[l * K:(l + 1) * K] = -p.omega[l] * b
    for l in range(L - 1):
        c[n_a + 2 * l] = c[n_a + 2 * l + 1] = p.lambda_ * p.s_hat[l]

    rows, lo, hi = [], [], []
    for l in range(L):
        r = np.zeros(n_a + n_d)
        r[l * K:(l + 1) * K] = 1
        rows.append(r), lo.append(1), hi.append(1)
    for l in range(L - 1):
        r = np.zeros(n_a + n_d)
        r[l * K:(l + 1) * K] = b
        r[(l + 1) * K:(l + 2) * K] = -b
        r[n_a + 2 * l], r[n_a + 2 * l + 1] = -1, 1
        rows.append(r), lo.append(0), hi.append(0)
    for weights, scale, budget in ((p.w_count, b, p.size_budget), (p.macs, b * b, p.bitops_budget)):
        r = np.zeros(n_a + n_d)
        for l in range(L):
            r[l * K:(l + 1) * K] = weights[l] * scale
        rows.append(r), lo.append(-np.inf), hi.append(budget)

    integrality = np.concatenate([np.ones(n_a), np.zeros(n_d)])
    upper = np.concatenate([np.ones(n_a), np.full(n_d, np.inf)])
    res = milp(c, constraints=LinearConstraint(np.array(rows), lo, hi), integrality=integrality,
               bounds=Bounds(np.zeros(n_a + n_d), upper), options={"mip_rel_gap": 0})
    assert res.success
    return -res.fun


def test_bnb_matches_milp_on_random_instances():
    rng = random.Random(2024)
    for _ in range(40):
        p = random_problem(rng, rng.randint(2, 10), [4, 5, 6, 7, 8])
        a = mixq.solve_bnb(p)
        assert a.feasible
        assert a.objective == pytest.approx(milp_optimum(p), abs=1e-6)
