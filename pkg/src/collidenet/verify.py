"""Fast self-checks of the core properties, runnable without pytest."""

import itertools

import numpy as np

from . import analysis, channel, field
from .combiner import conventional_cost_vs_coded_cost
from .pipeline import FIGURE_CASES, FIGURE_SIZES, run_scenario
from .queues import QueueSet, QueueTag as T, TRANSITIONS, apply_case


def _naive_rank(a, q):
    a = [[int(x) % q for x in row] for row in a]
    r = 0
    cols = len(a[0]) if a else 0
    for c in range(cols):
        piv = next((i for i in range(r, len(a)) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = pow(a[r][c], q - 2, q)
        for i in range(len(a)):
            if i != r and a[i][c]:
                f = a[i][c] * inv % q
                a[i] = [(x - f * y) % q for x, y in zip(a[i], a[r])]
        r += 1
    return r


def check_case_table():
    quads = list(itertools.product((0, 1), repeat=4))
    return sorted(channel.case_of(x) for x in quads) == list(range(1, 17))


def check_mirror():
    for k in range(1, 17):
        da, db = TRANSITIONS[k]
        ma, mb = TRANSITIONS[channel.mirror_case(k)]
        if (ma, mb) != (db, da):
            return False
    return True


def check_conservation():
    for k in range(1, 17):
        qs = QueueSet(1, 1)
        apply_case(qs, k, qs.head(1), qs.head(2))
        if qs.total(1) != 1 or qs.total(2) != 1:
            return False
    return True


def check_rank(trials=200, seed=0):
    rng = np.random.default_rng(seed)
    q = 7
    for _ in range(trials):
        n, m = rng.integers(1, 7, size=2)
        a = rng.integers(0, 3, size=(n, m))
        if field.rank(a, q) != _naive_rank(a.tolist(), q):
            return False
    return True


def check_regions():
    v = analysis.capacity_region(0.5).vertex_floats()
    want = [(0.0, 0.0), (0.5, 0.0), (0.5, 0.375), (0.45, 0.45), (0.375, 0.5), (0.0, 0.5)]
    return v == want


def check_cost_example():
    from fractions import Fraction as F
    c = conventional_cost_vs_coded_cost()
    return (c["conventional"], c["coded"], c["improvement"]) == (F(10, 3), F(8, 3), F(1, 5))


def check_figures(seeds=20):
    for name, alphas in FIGURE_CASES.items():
        m1, m2 = FIGURE_SIZES[name]
        for s in range(seeds):
            queues, _, stores = run_scenario(alphas, m1, m2, np.random.default_rng(s))
            if queues[1, T.INITIAL] or queues[2, T.INITIAL]:
                return False
            if not stores[0].decode(range(m1)).success:
                return False
            if not stores[1].decode(range(m1, m1 + m2)).success:
                return False
    return True


def check_prediction():
    t = analysis.predict_total_time(729)
    return (t["phase1"], t["phase2"], t["total"]) == (1053, 1224, 2277)


CHECKS = [
    ("case table is a bijection", check_case_table),
    ("mirror symmetry of transitions", check_mirror),
    ("packet conservation per case", check_conservation),
    ("rank agrees with naive elimination", check_rank),
    ("capacity region vertices at p=1/2", check_regions),
    ("cost example 10/3 vs 8/3", check_cost_example),
    ("coding scenarios decode", check_figures),
    ("finite-m time prediction", check_prediction),
]


def run_all(echo=print):
    ok = True
    for name, fn in CHECKS:
        passed = bool(fn())
        ok &= passed
        echo(f"{'PASS' if passed else 'FAIL'}  {name}")
    return ok
