import math
from fractions import Fraction

import numpy as np
import pytest

from collidenet.analysis import (PrecoderTrace, capacity_region, chernoff_bound, lemma2_check,
                                 limit_throughput, phase1_halting_bound, predict_total_time,
                                 rateless_region, repetition_trace, tdma_region, trace_ranks)
from collidenet.errors import CausalityError, ConfigError
from collidenet.pipeline import run_rateless, run_tdma, theorem1_trace, trial_rngs
from collidenet.queues import run_phase1

F = Fraction


def test_capacity_half_vertices():
    v = capacity_region(F(1, 2)).vertices
    assert set(v) == {(0, 0), (F(1, 2), 0), (F(1, 2), F(3, 8)), (F(9, 20), F(9, 20)),
                      (F(3, 8), F(1, 2)), (0, F(1, 2))}
    assert v[0] == (0, 0)


def test_capacity_degenerate_p():
    assert capacity_region(0).vertices == [(0, 0)]
    assert set(capacity_region(1).vertices) == {(0, 0), (1, 0), (0, 1)}
    with pytest.raises(ConfigError):
        capacity_region(1.2)


def test_vertices_tight_on_two_constraints():
    for p in (F(1, 4), F(1, 2), F(3, 4)):
        for reg in (capacity_region(p), tdma_region(p), rateless_region(p)):
            for x, y in reg.vertices:
                assert len(reg.active((x, y))) >= 2
                assert 0 <= x <= 1 and 0 <= y <= 1


def test_baseline_sum_bounds():
    assert tdma_region(F(1, 2)).vertices == [(0, 0), (F(1, 2), 0), (0, F(1, 2))]
    assert max(x + y for x, y in rateless_region(F(1, 2)).vertices) == F(3, 4)
    assert max(x + y for x, y in tdma_region(1).vertices) == 1
    assert max(x + y for x, y in rateless_region(1).vertices) == 1
    assert max(x + y for x, y in rateless_region(F(3, 10)).vertices) == F(51, 100)


def test_capacity_contains_baselines_on_grid():
    for k in range(101):
        p = F(k, 100)
        cap = capacity_region(p)
        assert all(cap.contains(v) for v in tdma_region(p).vertices)
    cap = capacity_region(F(1, 2))
    assert all(cap.contains(v) for v in rateless_region(F(1, 2)).vertices)
    assert F(9, 20) > F(3, 8)


def test_grid_scan_agrees_coarse():
    # points strictly inside or outside the region by more than the step
    reg = capacity_region(F(1, 2))
    step = F(1, 100)
    for i in range(0, 61):
        for j in range(0, 61):
            x, y = i * step, j * step
            inside = reg.contains((x, y))
            expect = (x <= F(1, 2) and y <= F(1, 2) and x + F(3, 2) * y <= F(9, 8)
                      and F(3, 2) * x + y <= F(9, 8))
            assert inside == expect


def test_predict_729():
    out = predict_total_time(729)
    assert (out["phase1"], out["phase2"], out["total"]) == (1053, 1224, 2277)
    assert out["throughput"] == F(729, 2277)
    assert abs(float(out["throughput"]) - 0.3202) < 1e-4
    assert predict_total_time(0)["total"] == 0


def test_predict_limit():
    assert limit_throughput() == F(9, 20)
    vals = [float(predict_total_time(10**k)["throughput"]) for k in (3, 6, 9, 12)]
    assert vals == sorted(vals) and abs(vals[-1] - 0.45) < 1e-3


def test_lemma2_p1_equal():
    rng = np.random.default_rng(0)
    traces = [repetition_trace(1, 200, rng) for _ in range(5)]
    res = lemma2_check(traces, 1)
    assert res.lhs == res.rhs and res.margin == 0 and res.holds


def test_lemma2_repetition_half():
    rng = np.random.default_rng(1)
    res = lemma2_check([repetition_trace(0.5, 2000, rng) for _ in range(40)], 0.5)
    # a packet is heard at Rx2 with probability 2/3, so both sides have mean
    # n/3 and the inequality is tight for this precoder
    assert res.holds
    assert abs(res.lhs - 2000 / 3) < 4 * res.stderr + 5


def test_lemma2_theorem1_trace_half():
    traces = [theorem1_trace(0.5, 2000, *trial_rngs(t, 0)) for t in range(20)]
    res = lemma2_check(traces, 0.5)
    assert res.holds
    assert res.trials == 20 and res.stderr > 0


def test_causality_rejected():
    tr = repetition_trace(0.5, 50, np.random.default_rng(0))
    bad = PrecoderTrace(tr.n, tr.m1, tr.alphas, tr.gains, tr.rows, np.arange(tr.n))
    with pytest.raises(CausalityError):
        trace_ranks(bad, 2**31 - 1)
    with pytest.raises(CausalityError):
        lemma2_check([bad], 0.5)


def test_chernoff_examples():
    assert chernoff_bound(1e-9, [1.0]) == 1.0
    assert chernoff_bound(3.0, [0.0, 0.0]) == 0.0
    assert chernoff_bound(2.0, [1.0]) == pytest.approx(2 * math.exp(-1))
    with pytest.raises(ValueError):
        chernoff_bound(-1, [1])
    m = 8000
    s = m ** (2 / 3)
    got = chernoff_bound(s, [m / 4 + 3 * s / 16])
    assert got == pytest.approx(2 * math.exp(-m ** (4 / 3) / (m + 0.75 * s)))


def test_halting_bound_m1e4_and_frequency():
    bound = phase1_halting_bound(10_000)
    assert bound < 1e-8
    halts = sum(not run_phase1(0.5, 10_000, rng=np.random.default_rng(s), mode="paper",
                               build_queues=False).ok for s in range(500))
    assert halts / 500 <= bound


def test_tdma_simulation_p03():
    m = 3000
    sums = [2 * m / run_tdma(0.3, m, trial_rngs(s, 0)[0]) for s in range(10)]
    assert abs(np.mean(sums) / 0.3 - 1) <= 0.02
    assert run_tdma(0.3, 0, np.random.default_rng(0)) == 0


def test_rateless_simulation_p03():
    m = 2000
    sums = [2 * m / run_rateless(0.3, m, *trial_rngs(s, 0)).duration for s in range(4)]
    assert abs(np.mean(sums) / 0.51 - 1) <= 0.02


def test_region_csv_rows():
    rows = capacity_region(F(1, 2)).csv_rows(0.5)
    assert rows[0] == (0.5, 0.0, 0.0, "R1>=0;R2>=0")
    assert (0.5, 0.45, 0.45, "R1+(2-p)R2;(2-p)R1+R2") in rows
