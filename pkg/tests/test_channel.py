import itertools

import numpy as np
import pytest

from collidenet.channel import (CASE_TABLE, ChannelState, ChannelStream, LinkMeasurement,
                                ScriptedStream, case_codes, case_of, classify_receiver_state,
                                mirror_case, mirror_quadruple, sample_state, sample_states)
from collidenet.errors import ConfigError

MIRRORS = {5: 9, 6: 10, 7: 11, 8: 12, 2: 3, 13: 14}


def test_case_table_is_bijection():
    quads = list(itertools.product((0, 1), repeat=4))
    cases = [case_of(q) for q in quads]
    assert sorted(cases) == list(range(1, 17))
    assert case_of((1, 1, 1, 1)) == 1
    assert case_of((0, 1, 1, 0)) == 15
    assert case_of((0, 0, 0, 0)) == 16


def test_case_codes_vectorized():
    quads = np.array(list(itertools.product((0, 1), repeat=4)))
    from collidenet.channel import CASE_BY_CODE
    assert [int(CASE_BY_CODE[c]) for c in case_codes(quads)] == [CASE_TABLE[tuple(q)] for q in quads]


def test_mirror_pairs():
    for a, b in MIRRORS.items():
        assert mirror_case(a) == b and mirror_case(b) == a
    for c in (1, 4, 15, 16):
        assert mirror_case(c) == c
    for q in itertools.product((0, 1), repeat=4):
        assert mirror_quadruple(mirror_quadruple(q)) == q


def test_state_validation_and_links():
    s = ChannelState((1, 0, 1, 1), (2, 3, 4, 5))
    assert s.case == 3
    assert s.link(1, 2) == (0, 3) and s.link(2, 1) == (1, 4)
    assert s.mirrored().alpha == (1, 1, 0, 1)
    assert s.mirrored().gains == (5, 4, 3, 2)
    with pytest.raises(ValueError):
        ChannelState((1, 2, 0, 0))
    with pytest.raises(ValueError):
        ChannelState((1, 0, 0, 0), (0, 1, 1, 1))
    with pytest.raises(ValueError):
        case_of((2, 0, 0, 0))


@pytest.mark.parametrize("p,quad", [(0, (0, 0, 0, 0)), (1, (1, 1, 1, 1))])
def test_degenerate_p(p, quad):
    rng = np.random.default_rng(0)
    for _ in range(50):
        s = sample_state(p, rng)
        assert s.alpha == quad and all(g != 0 for g in s.gains)


@pytest.mark.parametrize("p", [-0.1, 1.5, float("nan")])
def test_bad_p(p):
    with pytest.raises(ConfigError):
        sample_states(p, np.random.default_rng(0), 3)


def test_sampling_deterministic():
    a = sample_states(0.5, np.random.default_rng(9), 100)
    b = sample_states(0.5, np.random.default_rng(9), 100)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_case_frequencies_half():
    alphas, gains = sample_states(0.5, np.random.default_rng(1), 10**6)
    freq = np.bincount(case_codes(alphas), minlength=16) / 10**6
    assert np.all(np.abs(freq - 1 / 16) <= 0.005)
    assert gains.min() >= 1


@pytest.mark.parametrize("p", [0.3, 0.7])
def test_extreme_case_probabilities(p):
    n = 400_000
    alphas, _ = sample_states(p, np.random.default_rng(2), n)
    codes = case_codes(alphas)
    for code, want in ((15, p**4), (0, (1 - p) ** 4)):
        f = np.mean(codes == code)
        assert abs(f - want) <= 4 * np.sqrt(want * (1 - want) / n)


def test_receiver_states():
    g = 10.0
    assert classify_receiver_state(LinkMeasurement(g + 3, g - 5, g + 6, g + 1, g)) == 1
    assert classify_receiver_state(LinkMeasurement(g - 1, g + 2, g + 1, g + 4, g)) == 2
    assert classify_receiver_state(LinkMeasurement(g - 1, g - 2, g + 1, g + 1, g)) == 3
    assert classify_receiver_state(LinkMeasurement(g - 1, g - 2, g - 1, g - 1, g)) == 4
    # both SINRs above the threshold: own signal first
    assert classify_receiver_state(LinkMeasurement(g + 1, g + 1, g + 2, g + 2, g)) == 1
    with pytest.raises(ValueError):
        LinkMeasurement(5, 0, 4, 0, 1)


def test_stream_chunking_invariant():
    a = ChannelStream(0.5, np.random.default_rng(4))
    b = ChannelStream(0.5, np.random.default_rng(4))
    parts = [a.take(n)[0] for n in (1, 4095, 4096, 10, 5000)]
    whole = b.take(sum(len(x) for x in parts))[0]
    assert np.array_equal(np.concatenate(parts), whole)


def test_stream_peek_consume_history():
    s = ChannelStream(0.5, np.random.default_rng(5), keep_history=True)
    peeked = s.peek(100)[0].copy()
    assert s.position == 0
    got = s.take(100)[0]
    assert np.array_equal(peeked, got)
    s.consume(9000)
    assert np.array_equal(s.history(0, 100)[0], got)
    t = ChannelStream(0.5, np.random.default_rng(5))
    t.consume(20000)
    with pytest.raises(ValueError):
        t.history(0, 10)


def test_scripted_stream_runs_out_silent():
    s = ScriptedStream([(1, 1, 1, 1)], rng=np.random.default_rng(0))
    a, _ = s.take(3)
    assert a.tolist() == [[1, 1, 1, 1], [0, 0, 0, 0], [0, 0, 0, 0]]
