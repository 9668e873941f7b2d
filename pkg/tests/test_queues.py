import itertools
from fractions import Fraction

import numpy as np
import pytest

from collidenet.channel import CASE_TABLE, QUADRUPLE_OF, ChannelStream, ScriptedStream, mirror_case
from collidenet.errors import ConfigError
from collidenet.queues import (COUNTED, TRANSITIONS, QueueSet, QueueTag as T, apply_case,
                               effective_alpha, expected_queue_sizes, m23, phase1_deadline,
                               run_phase1, thresholds)

MIRRORS = {5: 9, 6: 10, 7: 11, 8: 12, 2: 3, 13: 14}


def _where(qs, label):
    hits = [key for key, d in qs.q.items() for r in d if r.label == label]
    assert len(hits) == 1
    return hits[0]


@pytest.mark.parametrize("case,dest_a,dest_b", [
    (1, T.C1, T.C1), (4, T.FINAL, T.FINAL), (15, T.SIDE_OWN, T.SIDE_OWN),
    (16, T.INITIAL, T.INITIAL), (2, T.SIDE_OTHER, T.FINAL), (7, T.FINAL, T.COMMON),
    (11, T.COMMON, T.FINAL), (13, T.INITIAL, T.SIDE_OWN), (14, T.SIDE_OWN, T.INITIAL),
])
def test_apply_case_examples(case, dest_a, dest_b):
    qs = QueueSet(1, 1)
    apply_case(qs, case, qs.head(1), qs.head(2))
    assert _where(qs, "a1") == (1, dest_a)
    assert _where(qs, "b1") == (2, dest_b)


def test_case16_unchanged():
    qs = QueueSet(2, 2)
    before = qs.snapshot()
    assert apply_case(qs, 16, qs.head(1), qs.head(2)) == []
    assert qs.snapshot() == before


def test_apply_case_requires_heads():
    qs = QueueSet(2, 2)
    other = qs[1, T.INITIAL][1]
    with pytest.raises(ValueError):
        apply_case(qs, 4, other, qs.head(2))


def _swap(snapshot):
    return {(3 - i, t): v for (i, t), v in snapshot.items()}


def test_all_cases_and_occupancies_with_mirror():
    # every case, every occupancy pattern of the two initial queues
    for case, (occ1, occ2) in itertools.product(range(1, 17), itertools.product((0, 1), repeat=2)):
        eff = effective_alpha(QUADRUPLE_OF[case], occ1, occ2)
        eff_case = CASE_TABLE[eff]
        qs = QueueSet(occ1, occ2)
        apply_case(qs, eff_case, qs.head(1), qs.head(2))
        da, db = TRANSITIONS[eff_case]
        if occ1:
            assert _where(qs, "a1") == (1, da or T.INITIAL)
        if occ2:
            assert _where(qs, "b1") == (2, db or T.INITIAL)
        # a silent transmitter's links are masked
        if not occ1:
            assert eff[0] == eff[1] == 0
        # user swap commutes with the transition
        mq = QueueSet(occ2, occ1)
        apply_case(mq, mirror_case(eff_case), mq.head(1), mq.head(2))
        mirrored = {k: [x.replace("a", "#").replace("b", "a").replace("#", "b") for x in v]
                    for k, v in _swap(mq.snapshot()).items()}
        assert mirrored == qs.snapshot()


def test_stay_iff_no_departure_links():
    for quad, case in CASE_TABLE.items():
        da, db = TRANSITIONS[case]
        assert (da is None) == (quad[0] == quad[1] == 0)
        assert (db is None) == (quad[2] == quad[3] == 0)


def _partition_ok(qs, m1, m2):
    for i, m in ((1, m1), (2, m2)):
        labels = [r.label for t in T for r in qs[i, t] if not r.synthetic]
        assert len(labels) == m and len(set(labels)) == m


@pytest.mark.parametrize("seed", range(5))
def test_vector_engine_equals_step_engine(seed):
    for mode in ("adaptive", "paper"):
        a = run_phase1(0.5, 300, stream=ChannelStream(0.5, np.random.default_rng(seed)), mode=mode)
        b = run_phase1(0.5, 300, stream=ChannelStream(0.5, np.random.default_rng(seed)), mode=mode,
                       engine="step")
        assert a.queues.snapshot() == b.queues.snapshot()
        assert np.array_equal(a.cases, b.cases) and np.array_equal(a.sent, b.sent)
        assert a.halted == b.halted
        _partition_ok(a.queues, 300, 300)


def test_conservation_every_slot():
    rng = np.random.default_rng(3)
    qs = QueueSet(20, 15)
    for t in range(200):
        quad = tuple(int(x) for x in rng.integers(0, 2, 4))
        a, b = qs.head(1), qs.head(2)
        apply_case(qs, CASE_TABLE[effective_alpha(quad, a is not None, b is not None)], a, b, t)
        _partition_ok(qs, 20, 15)
        assert len(qs[1, T.C1]) == len(qs[2, T.C1])


def test_expected_sizes():
    e = expected_queue_sizes(Fraction(1, 2), 12)
    assert (e[T.C1], e[T.SIDE_OWN], e[T.SIDE_OTHER], e[T.COMMON]) == (1, 2, 1, 2)
    e = expected_queue_sizes(1, 7)
    assert (e[T.C1], e[T.SIDE_OWN], e[T.SIDE_OTHER], e[T.COMMON]) == (7, 0, 0, 0)
    with pytest.raises(ConfigError):
        expected_queue_sizes(0, 10)


def test_expected_sizes_general_p_monte_carlo():
    p, m, n = 0.3, 10_000, 200
    exp = expected_queue_sizes(p, m)
    counts = {t: [] for t in COUNTED}
    for s in range(n):
        r = run_phase1(p, m, rng=np.random.default_rng(s), mode="adaptive", build_queues=False)
        for t in COUNTED:
            counts[t].append(r.counts[1, t])
    for t in COUNTED:
        x = np.asarray(counts[t], float)
        assert abs(x.mean() - float(exp[t])) <= 3 * x.std(ddof=1) / np.sqrt(n)


def test_m_zero():
    r = run_phase1(0.5, 0, rng=np.random.default_rng(0))
    assert r.slots_used == 0 and r.ok and all(v == 0 for v in r.counts.values())


def test_deadline_and_thresholds():
    assert m23(729) == 81 and m23(1000) == 100
    assert phase1_deadline(0.5, 729) == 972 + 81
    th = thresholds(0.5, 729)
    assert th[T.C1] == Fraction(729, 12) + 81


def test_paper_mode_pads_to_thresholds():
    r = run_phase1(0.5, 3375, rng=np.random.default_rng(1), mode="paper")
    assert r.ok and r.slots_used == 4500 + 225
    assert not r.queues[1, T.INITIAL] and not r.queues[2, T.INITIAL]
    for i in (1, 2):
        for t in COUNTED:
            assert r.counts[i, t] <= r.thresholds[t]
            d = r.queues[i, t]
            assert len(d) == int(np.ceil(float(r.thresholds[t])))
            assert sum(x.synthetic for x in d) == r.padding[i, t]
            assert all(x.is_zero for x in d if x.synthetic)


def test_type1_halt():
    # a silent script cannot empty anything
    r = run_phase1(0.5, 8, stream=ScriptedStream([(0, 0, 0, 0)]), mode="paper")
    assert r.halted == "type-I" and not r.ok and not r.padding


def test_type2_halt():
    # all-collision script: every packet lands in C1, far above its threshold
    r = run_phase1(0.5, 8, stream=ScriptedStream([(1, 1, 1, 1)] * 40), mode="paper")
    assert r.halted == "type-II"


def test_adaptive_mode_no_padding():
    r = run_phase1(0.5, 500, rng=np.random.default_rng(2), mode="adaptive")
    assert r.ok and not r.padding
    assert not any(x.synthetic for d in r.queues.q.values() for x in d)


def test_halting_frequency_m12000():
    halts = sum(not run_phase1(0.5, 12_000, rng=np.random.default_rng(s), mode="paper",
                               build_queues=False).ok for s in range(100))
    assert halts / 100 <= 0.05


def test_c1_fraction_m60000():
    r = run_phase1(0.5, 60_000, rng=np.random.default_rng(11), mode="paper", build_queues=False)
    assert abs(r.counts[1, T.C1] / 60_000 - 1 / 12) <= 0.01


def test_bad_mode_and_engine():
    with pytest.raises(ConfigError):
        run_phase1(0.5, 3, rng=np.random.default_rng(0), mode="fast")
    with pytest.raises(ValueError):
        run_phase1(0.5, 3, rng=np.random.default_rng(0), engine="warp")
    with pytest.raises(ConfigError):
        run_phase1(0, 3, rng=np.random.default_rng(0))
    with pytest.raises(ConfigError):
        run_phase1(0.5, 3)
