"""Phase 2: deliver both common queues to both receivers.

Each transmitter sends random linear combinations of its common records.
Coding over a whole queue of ~m/3 records needs a dense elimination of that
size at every receiver, so the queues are cut into lockstep segments of at
most ``segment`` records per transmitter. A segment stays on air until the
delayed channel states show that both receivers hold enough equations for
it; transmitters then move to the next segment. Zero records carry nothing
and are never coded.

Enough equations is judged by the generic rank of the received pattern. With
A rows hearing only Tx1, B only Tx2 and C both, a receiver's rows have rank
min(A+B+C, K1+B+C, K2+A+C, K1+K2) for generic coefficients. The actual rank
is always checked by elimination afterwards.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .analysis import ThroughputRegion
from .errors import ConfigError
from .field import DEFAULT_Q, random_nonzero
from .queues import departure_probability

DEFAULT_SEGMENT = 256


@dataclass
class MulticastSession:
    m1c: int  # queue sizes including zero records
    m2c: int
    k1: int = 0  # records that carry data
    k2: int = 0
    mode: str = "adaptive"
    duration: int = 0  # slots spent in Phase 2
    busy_slots: int = 0  # slots until the last segment completed
    segments: list = field(default_factory=list)  # (start, end, k1, k2)
    rows: dict = field(default_factory=lambda: {1: 0, 2: 0})
    rank: dict = field(default_factory=lambda: {1: 0, 2: 0})
    decode_ok: dict = field(default_factory=lambda: {1: True, 2: True})
    failed_segments: int = 0
    coeffs: list = None  # per segment (V1, V2), only when kept

    @property
    def ok(self):
        return self.decode_ok[1] and self.decode_ok[2]


def _record_matrix(records, q):
    """Triplets (row, col, val) of the records' coefficient vectors."""
    r, c, v = [], [], []
    for i, rec in enumerate(records):
        for col, x in rec.coeffs.items():
            r.append(i)
            c.append(col)
            v.append(int(x) % q)
    return (np.asarray(r, np.int64), np.asarray(c, np.int64),
            np.asarray(v, np.uint64))


def _source_rows(mix, trip, q):
    """mix (L x k) times the sparse record matrix, as triplets mod q."""
    r, c, v = trip
    L = mix.shape[0]
    if L == 0 or c.size == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.uint64)
    order = np.argsort(c, kind="stable")
    r, c, v = r[order], c[order], v[order]
    qq = np.uint64(q)
    terms = mix[:, r] * v[None, :] % qq  # one column per record entry
    starts = np.flatnonzero(np.concatenate(([True], c[1:] != c[:-1])))
    # a source column appears in few records, so these sums stay small
    out = np.add.reduceat(terms, starts, axis=1) % qq
    rr, cc = np.nonzero(out)
    return rr.astype(np.int64), c[starts][cc], out[rr, cc]


def _first_full(alpha_1j, alpha_2j, k1, k2):
    """First slot count at which the generic rank reaches k1 + k2, or None."""
    a = np.cumsum(alpha_1j & ~alpha_2j)
    b = np.cumsum(alpha_2j & ~alpha_1j)
    c = np.cumsum(alpha_1j & alpha_2j)
    g = np.minimum.reduce([a + b + c, k1 + b + c, k2 + a + c])
    hit = np.flatnonzero(g >= k1 + k2)
    return int(hit[0]) + 1 if hit.size else None


def paper_duration(m1c, m2c, p=0.5):
    """ceil((m1c + m2c) / (1 - (1-p)^2)), i.e. /(3/4) at p = 1/2."""
    from fractions import Fraction
    if m1c + m2c == 0:
        return 0
    return math.ceil(Fraction(m1c + m2c) / departure_probability(Fraction(str(p))))


def run_phase2(common1, common2, p, stream, coef_rng, mode="adaptive",
               stores=None, q=DEFAULT_Q, segment=DEFAULT_SEGMENT,
               duration=None, keep_coeffs=False, kernels=None):
    """Deliver two lists of PacketRecords to both receivers.

    ``mode="adaptive"`` stops when the last segment is complete. ``"paper"``
    spends exactly ``duration`` slots (default ``ceil((m1c+m2c)/d)``); a
    segment still incomplete when time runs out fails. Receiver stores, when
    given, get the recovered records of every full-rank segment and the raw
    received combinations of any other segment.
    """
    if mode not in ("paper", "adaptive"):
        raise ConfigError(f"unknown mode {mode!r}")
    k = kernels or _backend
    common1, common2 = list(common1), list(common2)
    real1 = [r for r in common1 if r.coeffs]
    real2 = [r for r in common2 if r.coeffs]
    ses = MulticastSession(len(common1), len(common2), len(real1), len(real2), mode)
    if keep_coeffs:
        ses.coeffs = []
    if mode == "paper" and duration is None:
        duration = paper_duration(ses.m1c, ses.m2c, p)
    k1, k2 = ses.k1, ses.k2
    S = max(-(-k1 // segment), -(-k2 // segment))
    parts1 = np.array_split(np.arange(k1), S) if S else []
    parts2 = np.array_split(np.arange(k2), S) if S else []
    d = departure_probability(p) if p > 0 else 0.0
    if S and d == 0:
        raise ConfigError("p = 0: nothing can be delivered")

    t = 0
    for s in range(S):
        i1, i2 = parts1[s], parts2[s]
        n1, n2 = i1.size, i2.size
        left = None if mode == "adaptive" else duration - t
        if left is not None and left <= 0:
            ses.failed_segments += S - s
            ses.decode_ok = {1: False, 2: False}
            break
        guess = int((n1 + n2) / d * 1.25) + 32
        while True:
            if left is not None:
                guess = min(guess, left)
            alphas, gains = stream.peek(guess)
            al = alphas.astype(bool)
            ends = [_first_full(al[:, 0], al[:, 2], n1, n2),
                    _first_full(al[:, 1], al[:, 3], n1, n2)]
            if None not in ends:
                L = max(ends)
                complete = True
                break
            if left is not None and guess >= left:
                L = left
                complete = False
                break
            guess *= 2
        alphas, gains = stream.take(L)
        V1 = random_nonzero(coef_rng, (L, n1), q)
        V2 = random_nonzero(coef_rng, (L, n2), q)
        if keep_coeffs:
            ses.coeffs.append((t, V1, V2, i1, i2))
        ses.segments.append((t, t + L, n1, n2))
        recs1 = [real1[j] for j in i1]
        recs2 = [real2[j] for j in i2]
        for rx in (1, 2):
            a1 = alphas[:, rx - 1].astype(np.uint64)  # alpha_1rx
            a2 = alphas[:, rx + 1].astype(np.uint64)  # alpha_2rx
            heard = np.flatnonzero((a1 | a2) != 0)
            g1 = (a1 * gains[:, rx - 1])[heard, None]
            g2 = (a2 * gains[:, rx + 1])[heard, None]
            rows = np.ascontiguousarray(np.hstack([g1 * V1[heard] % np.uint64(q),
                                                   g2 * V2[heard] % np.uint64(q)]))
            ses.rows[rx] += heard.size
            work = rows.copy()
            r, _ = k.rref_inplace(work, q, n1 + n2, False) if work.size else (0, None)
            r = int(r)
            ses.rank[rx] += r
            full = r == n1 + n2
            if not full:
                ses.decode_ok[rx] = False
            if stores is None:
                continue
            store = stores[rx - 1]
            if full and not store.keep_raw:
                trip = _record_matrix(recs1 + recs2, q)
                store.add_rows(*trip, count=n1 + n2)
            else:
                trip = _record_matrix(recs1 + recs2, q)
                rr, cc, vv = _source_rows(rows, trip, q)
                store.add_rows(rr, cc, vv, count=heard.size, slots=heard + t)
        if not complete:
            ses.failed_segments += S - s
            t += L
            break
        t += L
    ses.busy_slots = t
    if mode == "paper":
        if duration > t:
            stream.consume(duration - t)  # idle slots still elapse
        ses.duration = duration
    else:
        ses.duration = t
    return ses


def lemma1_region(p=0.5):
    """Two-multicast region {R_i <= 1/2, R1 + R2 <= 3/4} at p = 1/2."""
    from fractions import Fraction
    if Fraction(str(p)) != Fraction(1, 2):
        raise ConfigError("the two-multicast region is only stated for p = 1/2")
    h = Fraction(1, 2)
    return ThroughputRegion([(1, 0, h), (0, 1, h), (1, 1, Fraction(3, 4))], name="two-multicast")
