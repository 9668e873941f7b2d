"""Phase 1: uncategorized transmission and the per-case queue rules.

Every slot each transmitter with a nonempty initial queue sends its head
packet. The channel case decides where each head goes. Queue tags per
transmitter i (with i' the other user):

    INITIAL     Q_{i->i}      not yet delivered anywhere
    C1          Q_{i,C1}      collided at both receivers (case 1)
    COMMON      Q_{i->{1,2}}  useful to both receivers
    SIDE_OWN    Q_{i->i|i'}   needed by Rx_i, already known at Rx_i'
    SIDE_OTHER  Q_{i->i'|i}   known at Rx_i, needed by Rx_i' to clear a collision
    FINAL       Q_{i,F}       nothing more to do
"""

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from .channel import CASE_BY_CODE, QUADRUPLE_OF, ChannelStream, case_codes, check_probability
from .errors import ConfigError


class QueueTag(str, Enum):
    INITIAL = "init"
    C1 = "c1"
    COMMON = "common"
    SIDE_OWN = "side_own"
    SIDE_OTHER = "side_other"
    FINAL = "final"


T = QueueTag
# case -> (destination of Tx1's packet, destination of Tx2's packet); None = stays
TRANSITIONS = {
    1: (T.C1, T.C1),
    2: (T.SIDE_OTHER, T.FINAL),
    3: (T.FINAL, T.SIDE_OTHER),
    4: (T.FINAL, T.FINAL),
    5: (T.FINAL, None),
    6: (T.FINAL, None),
    7: (T.FINAL, T.COMMON),
    8: (T.FINAL, T.COMMON),
    9: (None, T.FINAL),
    10: (None, T.FINAL),
    11: (T.COMMON, T.FINAL),
    12: (T.COMMON, T.FINAL),
    13: (None, T.SIDE_OWN),
    14: (T.SIDE_OWN, None),
    15: (T.SIDE_OWN, T.SIDE_OWN),
    16: (None, None),
}
COUNTED = (T.C1, T.SIDE_OWN, T.SIDE_OTHER, T.COMMON)

# small integer codes for vectorized bookkeeping
TAG_CODES = {None: 0, T.C1: 1, T.COMMON: 2, T.SIDE_OWN: 3, T.SIDE_OTHER: 4, T.FINAL: 5}
TAG_BY_CODE = {v: k for k, v in TAG_CODES.items()}
_DEST1 = np.array([0] + [TAG_CODES[TRANSITIONS[c][0]] for c in range(1, 17)], dtype=np.int8)
_DEST2 = np.array([0] + [TAG_CODES[TRANSITIONS[c][1]] for c in range(1, 17)], dtype=np.int8)


@dataclass
class PacketRecord:
    """A source packet or a coded combination.

    ``coeffs`` maps global unknown index -> coefficient; an empty mapping is a
    synthetic zero packet.
    """
    owner: int
    label: str
    coeffs: dict
    status: QueueTag = T.INITIAL
    origin_slot: int = None
    synthetic: bool = False

    @property
    def is_zero(self):
        return not self.coeffs


def packet_label(owner, seq):
    return f"{'ab'[owner - 1]}{seq + 1}"


def source_packet(owner, seq, m1):
    col = seq if owner == 1 else m1 + seq
    return PacketRecord(owner, packet_label(owner, seq), {col: 1})


def zero_packet(owner, k):
    return PacketRecord(owner, f"0{'ab'[owner - 1]}{k}", {}, synthetic=True)


class QueueSet:
    """Ordered queues for both transmitters, keyed by (tx, QueueTag)."""

    def __init__(self, m1=0, m2=0):
        self.m1, self.m2 = int(m1), int(m2)
        self.q = {(i, t): deque() for i in (1, 2) for t in QueueTag}
        for k in range(self.m1):
            self.q[1, T.INITIAL].append(source_packet(1, k, self.m1))
        for k in range(self.m2):
            self.q[2, T.INITIAL].append(source_packet(2, k, self.m1))

    @property
    def n_unknowns(self):
        return self.m1 + self.m2

    def __getitem__(self, key):
        return self.q[key]

    def head(self, i):
        d = self.q[i, T.INITIAL]
        return d[0] if d else None

    def push(self, i, tag, rec):
        rec.status = tag
        self.q[i, tag].append(rec)

    def move_head(self, i, tag, slot=None):
        rec = self.q[i, T.INITIAL].popleft()
        if slot is not None:
            rec.origin_slot = slot
        self.push(i, tag, rec)
        return rec

    def counts(self):
        return {(i, t): len(self.q[i, t]) for i in (1, 2) for t in QueueTag}

    def total(self, i, real_only=False):
        return sum(len(d) if not real_only else sum(not r.synthetic for r in d)
                   for (j, _), d in self.q.items() if j == i)

    def snapshot(self):
        """Labels per queue, for comparisons in tests."""
        return {(i, t.value): [r.label for r in self.q[i, t]] for i in (1, 2) for t in QueueTag}


def effective_alpha(alpha, active1, active2):
    """Zero the links of a silent transmitter."""
    a11, a12, a21, a22 = alpha
    if not active1:
        a11 = a12 = 0
    if not active2:
        a21 = a22 = 0
    return (a11, a12, a21, a22)


def apply_case(queues, case, a=None, b=None, slot=None):
    """Move the heads ``a`` (Tx1) and ``b`` (Tx2) according to ``case``.

    ``case`` must already account for silent transmitters (see
    :func:`effective_alpha`). Returns a list of (label, from, to) moves.
    """
    da, db = TRANSITIONS[case]
    moves = []
    if a is not None and da is not None:
        if queues.head(1) is not a:
            raise ValueError("a must be the head of Tx1's initial queue")
        queues.move_head(1, da, slot)
        moves.append((a.label, T.INITIAL.value, da.value))
    if b is not None and db is not None:
        if queues.head(2) is not b:
            raise ValueError("b must be the head of Tx2's initial queue")
        queues.move_head(2, db, slot)
        moves.append((b.label, T.INITIAL.value, db.value))
    return moves


def departure_probability(p):
    return 1 - (1 - p) ** 2


def _frac(p):
    return p if isinstance(p, Fraction) else Fraction(str(p))


def expected_queue_sizes(p, m):
    """Expected terminal counts per transmitter, exact when p is rational.

    Keys: C1, SIDE_OWN (i->i|i'), SIDE_OTHER (i->i'|i), COMMON.
    """
    if float(p) <= 0 or float(p) > 1:
        raise ConfigError("expected queue sizes need 0 < p <= 1")
    p = _frac(p)
    d = departure_probability(p)
    landing = {
        T.C1: p**4,
        T.SIDE_OTHER: p**3 * (1 - p),
        T.COMMON: p**2 * (1 - p),
        T.SIDE_OWN: p * (1 - p) ** 2,
    }
    return {t: m * v / d for t, v in landing.items()}


def m23(m):
    """m**(2/3): exact Fraction for perfect cubes, float otherwise."""
    m = int(m)
    r = round(m ** (1 / 3))
    for c in (r - 1, r, r + 1):
        if c >= 0 and c**3 == m:
            return Fraction(c * c)
    return m ** (2 / 3)


def ceil_exact(x):
    if isinstance(x, Fraction):
        return math.ceil(x)
    # guard against 1e-12 float noise on integral values
    r = round(x)
    return int(r) if abs(x - r) < 1e-9 else math.ceil(x)


def phase1_deadline(p, m):
    """ceil(m/d + m^{2/3}); for p = 1/2 this is ceil(4/3 m + m^{2/3})."""
    if m == 0:
        return 0
    return ceil_exact(m / departure_probability(_frac(p)) + m23(m))


def thresholds(p, m):
    s = m23(m)
    return {t: v + s for t, v in expected_queue_sizes(p, m).items()}


@dataclass
class Phase1Result:
    queues: QueueSet
    slots_used: int
    mode: str
    halted: str = None  # None | "type-I" | "type-II"
    counts: dict = field(default_factory=dict)  # (tx, tag) -> real count
    thresholds: dict = field(default_factory=dict)
    padding: dict = field(default_factory=dict)  # (tx, tag) -> zero records added
    # per-slot log, all arrays of length slots_used
    alphas: np.ndarray = None
    gains: np.ndarray = None
    active: np.ndarray = None  # (n, 2) bool
    cases: np.ndarray = None  # effective case per slot
    sent: np.ndarray = None  # (n, 2) packet seq sent, -1 if silent
    dest: np.ndarray = None  # (n, 2) TAG_CODES of the move, 0 if none

    @property
    def ok(self):
        return self.halted is None


def _schedule(alphas, m1, m2):
    """Vectorized Phase 1 over a window of slots."""
    dep1 = (alphas[:, 0] | alphas[:, 1]).astype(np.int64)
    dep2 = (alphas[:, 2] | alphas[:, 3]).astype(np.int64)
    sent1 = np.cumsum(dep1) - dep1
    sent2 = np.cumsum(dep2) - dep2
    act1 = sent1 < m1
    act2 = sent2 < m2
    eff = alphas.astype(np.int64).copy()
    eff[~act1, 0:2] = 0
    eff[~act2, 2:4] = 0
    cases = CASE_BY_CODE[case_codes(eff)]
    d1 = np.where(act1, _DEST1[cases], 0)
    d2 = np.where(act2, _DEST2[cases], 0)
    s1 = np.where(act1, sent1, -1)
    s2 = np.where(act2, sent2, -1)
    return act1, act2, cases, d1, d2, s1, s2


def _finish_slot(alphas, m1, m2):
    """Number of slots until both initial queues are empty, or None."""
    dep1 = np.cumsum(alphas[:, 0] | alphas[:, 1])
    dep2 = np.cumsum(alphas[:, 2] | alphas[:, 3])
    f1 = 0 if m1 == 0 else (np.searchsorted(dep1, m1) + 1 if dep1.size and dep1[-1] >= m1 else None)
    f2 = 0 if m2 == 0 else (np.searchsorted(dep2, m2) + 1 if dep2.size and dep2[-1] >= m2 else None)
    if f1 is None or f2 is None:
        return None
    return int(max(f1, f2))


def run_phase1(p, m1, m2=None, stream=None, rng=None, mode="paper",
               stores=None, engine="vector", q=None, build_queues=True):
    """Run Phase 1 and return a :class:`Phase1Result`.

    ``mode="paper"`` runs exactly the fixed deadline, halts on the error
    conditions and pads the counted queues with zero packets; ``"adaptive"``
    stops as soon as both initial queues are empty. ``stores`` is an optional
    pair of receiver stores fed with every slot's reception.
    ``build_queues=False`` skips the per-packet records and only reports
    counts, halting and padding (vector engine only).
    """
    if m2 is None:
        m2 = m1
    m1, m2 = int(m1), int(m2)
    if mode not in ("paper", "adaptive"):
        raise ConfigError(f"unknown mode {mode!r}")
    p = check_probability(p)
    if p == 0 and (m1 or m2):
        raise ConfigError("p = 0: no packet can ever leave")
    if stream is None:
        if rng is None:
            raise ConfigError("need a ChannelStream or an rng")
        stream = ChannelStream(p, rng) if q is None else ChannelStream(p, rng, q)

    m = max(m1, m2)
    if mode == "paper":
        n = phase1_deadline(p, m)
        alphas, gains = stream.take(n)
    else:
        guess = int(math.ceil(m / departure_probability(p) * 1.1)) + 64 if m else 0
        while True:
            alphas, gains = stream.peek(guess)
            n = _finish_slot(alphas, m1, m2)
            if n is not None:
                break
            guess *= 2
        alphas, gains = stream.take(n)

    if engine == "vector":
        act1, act2, cases, d1, d2, s1, s2 = _schedule(alphas, m1, m2)
        queues = None
        if build_queues:
            queues = QueueSet(m1, m2)
            _fill_queues(queues, d1, d2, s1, s2)
    elif engine == "step":
        queues = QueueSet(m1, m2)
        act1, act2, cases, d1, d2, s1, s2 = _step_engine(queues, alphas)
    else:
        raise ValueError(f"unknown engine {engine!r}")

    res = Phase1Result(queues, n, mode, alphas=alphas, gains=gains,
                       active=np.stack([act1, act2], axis=1) if n else np.zeros((0, 2), bool),
                       cases=cases, sent=np.stack([s1, s2], axis=1) if n else np.zeros((0, 2), np.int64),
                       dest=np.stack([d1, d2], axis=1) if n else np.zeros((0, 2), np.int8))
    tally = {i: np.bincount(d, minlength=6) for i, d in ((1, d1), (2, d2))}
    res.counts = {(i, t): int(tally[i][TAG_CODES[t]]) for i in (1, 2) for t in COUNTED}

    if stores is not None:
        feed_phase1_rows(stores, res, m1)

    if mode == "paper" and m:
        res.thresholds = thresholds(p, m)
        left = (m1 - int(np.count_nonzero(d1)), m2 - int(np.count_nonzero(d2)))
        if left[0] or left[1]:
            res.halted = "type-I"
        elif any(res.counts[i, t] > res.thresholds[t] for i in (1, 2) for t in COUNTED):
            res.halted = "type-II"
        else:
            for i in (1, 2):
                for t in COUNTED:
                    need = ceil_exact(res.thresholds[t]) - res.counts[i, t]
                    if queues is not None:
                        for k in range(need):
                            queues.push(i, t, zero_packet(i, f"{t.value}{k}"))
                    res.padding[i, t] = need
    return res


def _fill_queues(queues, d1, d2, s1, s2):
    for i, d, s in ((1, d1, s1), (2, d2, s2)):
        init = queues[i, T.INITIAL]
        recs = list(init)
        slots = np.flatnonzero(d)
        for t in slots:
            rec = recs[s[t]]
            rec.origin_slot = int(t)
            queues.push(i, TAG_BY_CODE[int(d[t])], rec)
        init.clear()
        init.extend(recs[len(slots):])


def _step_engine(queues, alphas):
    """Reference engine: one apply_case call per slot."""
    n = len(alphas)
    act1 = np.zeros(n, bool)
    act2 = np.zeros(n, bool)
    cases = np.zeros(n, np.int8)
    d1 = np.zeros(n, np.int8)
    d2 = np.zeros(n, np.int8)
    s1 = np.full(n, -1, np.int64)
    s2 = np.full(n, -1, np.int64)
    sent = [0, 0]
    for t in range(n):
        a, b = queues.head(1), queues.head(2)
        eff = effective_alpha(tuple(int(x) for x in alphas[t]), a is not None, b is not None)
        case = CASE_BY_CODE[eff[0] * 8 + eff[1] * 4 + eff[2] * 2 + eff[3]]
        cases[t] = case
        da, db = TRANSITIONS[int(case)]
        if a is not None:
            act1[t], s1[t] = True, sent[0]
            d1[t] = TAG_CODES[da]
            sent[0] += da is not None
        if b is not None:
            act2[t], s2[t] = True, sent[1]
            d2[t] = TAG_CODES[db]
            sent[1] += db is not None
        apply_case(queues, int(case), a, b, slot=t)
    return act1, act2, cases, d1, d2, s1, s2


def feed_phase1_rows(stores, res, m1):
    """Append every slot's reception to both receiver stores.

    Rx_i hears Tx_j's packet scaled by g_ji whenever alpha_ji = 1 and Tx_j is
    active; slots where nothing is heard add no row.
    """
    n = res.slots_used
    if n == 0:
        return
    act = res.active
    col1 = res.sent[:, 0]
    col2 = np.where(res.sent[:, 1] >= 0, m1 + res.sent[:, 1], -1)
    for rx, store in zip((1, 2), stores):
        k1 = 0 if rx == 1 else 1  # alpha_1rx index
        k2 = 2 if rx == 1 else 3  # alpha_2rx index
        on1 = act[:, 0] & (res.alphas[:, k1] == 1)
        on2 = act[:, 1] & (res.alphas[:, k2] == 1)
        store.add_unit_pairs(
            np.arange(n),
            np.where(on1, col1, -1), res.gains[:, k1],
            np.where(on2, col2, -1), res.gains[:, k2],
        )


def quadruple_of(case):
    return QUADRUPLE_OF[case]
