"""Receiver memory and decoding.

Each slot in which a receiver hears anything becomes one row over the global
packet unknowns (Tx1's packets first, then Tx2's). Decoding asks which unit
vectors lie in the row space, which covers every successive-cancellation
chain at once.
"""

from dataclasses import dataclass

import numpy as np

from . import field
from .channel import ChannelState
from .field import DEFAULT_Q
from .sparse import SparseRows, analyze_rows


@dataclass
class DecodeReport:
    receiver: int
    resolved: np.ndarray  # own unknowns in the row space
    unresolved: np.ndarray
    rows: int
    rank: int
    projection_dimension: int

    @property
    def success(self):
        return self.unresolved.size == 0


def _as_sparse(v):
    """(cols, vals) from a dict, a PacketRecord-like object or a pair."""
    if v is None:
        return None
    if hasattr(v, "coeffs"):
        v = v.coeffs
    if isinstance(v, dict):
        return (np.fromiter(v.keys(), np.int64, len(v)),
                np.fromiter((int(x) for x in v.values()), np.uint64, len(v)))
    cols, vals = v
    return np.asarray(cols, np.int64), np.asarray(vals, np.uint64)


class EquationStore:
    """Rows heard by one receiver, with the slot each row came from.

    ``keep_raw`` asks Phase 2 to store every received combination in source
    coordinates instead of the recovered segment records; tests use it to
    check that the two views have the same row space.
    """

    def __init__(self, receiver, n_unknowns, q=DEFAULT_Q, keep_raw=False):
        self.receiver = receiver
        self.n_unknowns = int(n_unknowns)
        self.q = q
        self.keep_raw = keep_raw
        self.rows = SparseRows(self.n_unknowns)
        self.slot_tags = []  # (first_row, count, slot array or None)

    def __len__(self):
        return self.rows.n_rows

    def observe(self, state, v1=None, v2=None, slot=None):
        """Add alpha_1j g_1j v1 + alpha_2j g_2j v2 if it is nonzero."""
        if not isinstance(state, ChannelState):
            raise TypeError("state must be a ChannelState")
        q = self.q
        acc = {}
        for j, v in ((1, v1), (2, v2)):
            sv = _as_sparse(v)
            if sv is None:
                continue
            a, g = state.link(j, self.receiver)
            if not a:
                continue
            for c, x in zip(sv[0].tolist(), sv[1].tolist()):
                acc[c] = (acc.get(c, 0) + int(g) * int(x)) % q
        acc = {c: x for c, x in acc.items() if x}
        if not acc:
            return False
        self.slot_tags.append((self.rows.n_rows, 1, None if slot is None else np.array([slot])))
        self.rows.add(list(acc.keys()), list(acc.values()))
        return True

    def add_unit_pairs(self, slots, col_a, g_a, col_b, g_b):
        """Vectorized rows g_a e_{col_a} + g_b e_{col_b}; -1 means absent."""
        col_a = np.asarray(col_a, np.int64)
        col_b = np.asarray(col_b, np.int64)
        keep = (col_a >= 0) | (col_b >= 0)
        idx = np.flatnonzero(keep)
        ca, cb = col_a[idx], col_b[idx]
        ga = np.asarray(g_a, np.uint64)[idx]
        gb = np.asarray(g_b, np.uint64)[idx]
        local = np.arange(idx.size)
        ha, hb = ca >= 0, cb >= 0
        rows = np.concatenate([local[ha], local[hb]])
        cols = np.concatenate([ca[ha], cb[hb]])
        vals = np.concatenate([ga[ha], gb[hb]])
        self.slot_tags.append((self.rows.n_rows, idx.size, np.asarray(slots)[idx]))
        self.rows.add_block(rows, cols, vals, idx.size)

    def add_rows(self, rows, cols, vals, count, slots=None):
        """Append ``count`` rows given in triplet form (row ids local)."""
        self.slot_tags.append((self.rows.n_rows, int(count), slots))
        self.rows.add_block(rows, cols, vals, count)

    def copy(self):
        out = EquationStore(self.receiver, self.n_unknowns, self.q, self.keep_raw)
        out.rows = self.rows.copy()
        out.slot_tags = list(self.slot_tags)
        return out

    def dense(self):
        """Dense matrix of the store (small instances only)."""
        r, c, v = self.rows.triplets()
        out = np.zeros((self.rows.n_rows, self.n_unknowns), dtype=object)
        for i, j, x in zip(r.tolist(), c.tolist(), v.tolist()):
            out[i, j] = (out[i, j] + x) % self.q
        return out

    def decode(self, own):
        """Which of the unknowns in ``own`` lie in the row space."""
        own = np.asarray(sorted(int(u) for u in own), dtype=np.int64)
        resolved, rank = analyze_rows(self.rows, self.q)
        cross = np.ones(self.n_unknowns, dtype=bool)
        cross[own] = False
        _, rank_cross = analyze_rows(self.rows, self.q, col_mask=cross)
        hit = resolved[own] if own.size else np.zeros(0, bool)
        return DecodeReport(
            receiver=self.receiver,
            resolved=own[hit],
            unresolved=own[~hit],
            rows=self.rows.n_rows,
            rank=rank,
            projection_dimension=rank - rank_cross,
        )


def observe(store, state, v1=None, v2=None):
    store.observe(state, v1, v2)
    return store


def decode(store, own):
    return store.decode(own)


def decodability_metric(desired, interference, q=DEFAULT_Q):
    """dim of the desired column space once the interference space is removed."""
    return field.projection_dimension(desired, interference, q)


def own_unknowns(receiver, m1, m2):
    return range(m1) if receiver == 1 else range(m1, m1 + m2)
