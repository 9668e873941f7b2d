"""One trial of each scheme, all driven by a single channel stream.

Randomness for trial k of master seed s comes from
``SeedSequence([s, k]).spawn(2)``: the first child drives the channel, the
second the Phase-2 coding coefficients. Results therefore do not depend on
which worker runs a trial or in what order.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .analysis import PrecoderTrace, predict_total_time
from .channel import ChannelStream, ScriptedStream
from .combiner import combine
from .errors import ConfigError
from .field import DEFAULT_Q, random_nonzero
from .multicast import DEFAULT_SEGMENT, _record_matrix, _source_rows, run_phase2
from .queues import QueueTag as T, run_phase1
from .receiver import EquationStore


def trial_rngs(seed, trial):
    chan, coef = np.random.SeedSequence([int(seed), int(trial)]).spawn(2)
    return np.random.default_rng(chan), np.random.default_rng(coef)


@dataclass
class TheoremRun:
    """Everything a theorem1 trial produced, for tests and traces."""
    p: float
    m: int
    mode: str
    phase1: object
    plan: object = None
    phase2: object = None
    stores: tuple = None
    reports: dict = field(default_factory=dict)
    phase1_slots: int = 0
    phase2_slots: int = 0
    halt_kind: str = None

    @property
    def total_slots(self):
        return self.phase1_slots + self.phase2_slots

    @property
    def decode_ok(self):
        return {i: bool(self.reports.get(i) and self.reports[i].success) for i in (1, 2)}


def paper_phase2_duration(m):
    return predict_total_time(m)["phase2"]


def run_theorem1(p, m, chan_rng, coef_rng, mode="adaptive", q=DEFAULT_Q,
                 segment=DEFAULT_SEGMENT, decode=True, keep_raw=False,
                 keep_coeffs=False, stream=None):
    """Phase 1, both coding passes, Phase 2 and decoding at both receivers."""
    if mode == "paper" and Fraction(str(p)) != Fraction(1, 2):
        raise ConfigError("paper mode durations are only defined for p = 1/2")
    stream = stream or ChannelStream(p, chan_rng, q)
    stores = None
    if decode:
        stores = (EquationStore(1, 2 * m, q, keep_raw), EquationStore(2, 2 * m, q, keep_raw))
    ph1 = run_phase1(p, m, m, stream=stream, mode=mode, stores=stores)
    run = TheoremRun(p, m, mode, ph1, stores=stores, phase1_slots=ph1.slots_used)
    if ph1.halted:
        run.halt_kind = ph1.halted
        return run
    run.plan = combine(ph1.queues)
    duration = paper_phase2_duration(m) if mode == "paper" else None
    run.phase2 = run_phase2(ph1.queues[1, T.COMMON], ph1.queues[2, T.COMMON], p,
                            stream, coef_rng, mode=mode, stores=stores, q=q,
                            segment=segment, duration=duration,
                            keep_coeffs=keep_coeffs)
    run.phase2_slots = run.phase2.duration
    if decode:
        run.reports = {1: stores[0].decode(range(m)),
                       2: stores[1].decode(range(m, 2 * m))}
    return run


def run_tdma(p, m, chan_rng):
    """Alternate slot ownership; the owner repeats its head packet until its
    own link is on. Once one transmitter is done the other uses every slot.
    Returns the total slot count."""
    if m == 0:
        return 0
    if p == 0:
        raise ConfigError("p = 0: nothing can be delivered")
    stream = ChannelStream(p, chan_rng)
    guess = int(2 * m / p * 1.2) + 64
    while True:
        a, _ = stream.peek(guess)
        t = np.arange(guess)
        ok1 = (a[:, 0] == 1) & (t % 2 == 0)
        ok2 = (a[:, 3] == 1) & (t % 2 == 1)
        c1, c2 = np.cumsum(ok1), np.cumsum(ok2)
        if c1[-1] >= m and c2[-1] >= m:
            break
        guess *= 2
    f1 = int(np.searchsorted(c1, m))  # slot of the last delivery
    f2 = int(np.searchsorted(c2, m))
    later = 2 if f1 < f2 else 1
    f = min(f1, f2)
    done = int((c2 if later == 2 else c1)[f])
    own = a[:, 3] if later == 2 else a[:, 0]
    rest = np.cumsum(own[f + 1:])
    while rest.size == 0 or rest[-1] < m - done:
        guess *= 2
        a, _ = stream.peek(guess)
        own = a[:, 3] if later == 2 else a[:, 0]
        rest = np.cumsum(own[f + 1:])
    end = f + 1 + int(np.searchsorted(rest, m - done)) if m > done else f
    total = end + 1
    stream.consume(total)
    return total


def run_rateless(p, m, chan_rng, coef_rng, q=DEFAULT_Q, segment=DEFAULT_SEGMENT):
    """Both transmitters send random combinations of all their packets; both
    receivers decode everything. Returns the MulticastSession."""
    from .queues import source_packet
    stream = ChannelStream(p, chan_rng, q)
    recs1 = [source_packet(1, k, m) for k in range(m)]
    recs2 = [source_packet(2, k, m) for k in range(m)]
    return run_phase2(recs1, recs2, p, stream, coef_rng, mode="adaptive",
                      q=q, segment=segment)


# -- small scripted scenarios ------------------------------------------------

FIGURE_CASES = {
    "fig4": ((1, 1, 1, 1), (0, 1, 1, 0)),  # cases 1, 15
    "fig5": ((0, 1, 1, 0), (1, 0, 1, 1), (1, 1, 0, 1)),  # cases 15, 3, 2
    "fig6": ((1, 1, 0, 1), (0, 1, 0, 0)),  # cases 2, 14
}
FIGURE_SIZES = {"fig4": (2, 2), "fig5": (3, 3), "fig6": (2, 1)}


def run_scenario(alphas, m1, m2, rng, q=DEFAULT_Q):
    """Scripted Phase 1, both coding passes, then ideal delivery of every
    common record to both receivers. Returns (queues, plan, stores)."""
    stream = ScriptedStream(alphas, rng, q=q)
    n = m1 + m2
    stores = (EquationStore(1, n, q), EquationStore(2, n, q))
    ph1 = run_phase1(0.5, m1, m2, stream=stream, mode="adaptive", stores=stores)
    plan = combine(ph1.queues)
    deliver_common(stores, ph1.queues, rng, q)
    return ph1.queues, plan, stores


def deliver_common(stores, queues, rng, q=DEFAULT_Q):
    for i in (1, 2):
        for rec in queues[i, T.COMMON]:
            if not rec.coeffs:
                continue
            for st in stores:
                g = int(random_nonzero(rng, 1, q)[0])
                cols = list(rec.coeffs)
                st.add_rows(np.zeros(len(cols), np.int64), cols,
                            [g * int(rec.coeffs[c]) % q for c in cols], 1)


# -- precoder traces for the rank inequality --------------------------------

def symmetric_capacity(p):
    return p * (2 - p) ** 2 / (3 - p)


def theorem1_trace(p, n, chan_rng, coef_rng, q=DEFAULT_Q, load=0.9,
                   segment=DEFAULT_SEGMENT):
    """Tx1's precoding rows when the two-phase scheme runs for n slots.

    m is picked so the scheme would nearly fill n slots at the symmetric
    capacity point; the block is truncated or, if the scheme ends early,
    filled with silent slots.
    """
    m = max(1, int(load * n * symmetric_capacity(p)))
    stream = ChannelStream(p, chan_rng, q, keep_history=True)
    run = run_theorem1(p, m, chan_rng, coef_rng, mode="adaptive", q=q,
                       segment=segment, decode=False, keep_coeffs=True,
                       stream=stream)
    ph1 = run.phase1
    n1 = ph1.slots_used
    act = np.flatnonzero(ph1.active[:, 0])
    rows_r, rows_c, rows_v = [act], [ph1.sent[act, 0]], [np.ones(act.size, np.uint64)]
    if run.phase2 is not None:
        real1 = [r for r in ph1.queues[1, T.COMMON] if r.coeffs]
        for t0, V1, _V2, i1, _i2 in run.phase2.coeffs:
            recs = [real1[j] for j in i1]
            rr, cc, vv = _source_rows(V1, _record_matrix(recs, q), q)
            rows_r.append(rr + n1 + t0)
            rows_c.append(cc)
            rows_v.append(vv)
    # slots past the end of the scheme are silent but still have states
    alphas, gains = stream.history(0, n)
    r = np.concatenate(rows_r)
    c = np.concatenate(rows_c)
    v = np.concatenate(rows_v)
    keep = r < n
    return PrecoderTrace(n, m, alphas.copy(), gains.copy(),
                         (r[keep], c[keep], v[keep]), np.arange(n) - 1)
