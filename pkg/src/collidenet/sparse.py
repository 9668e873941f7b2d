"""Row-space analysis for large sparse systems over GF(q).

Receiver stores hold up to a few hundred thousand rows, almost all with one or
two nonzeros. Dense elimination at that size is out of reach, so analysis
runs in three steps:

1. peel: a row with a single unresolved unknown resolves it (exact, since
   entries are nonzero); repeat until no such row is left;
2. split the remaining rows (each with >= 2 unresolved unknowns) into
   connected components of the row/unknown incidence graph;
3. reduce every component densely.

Unit vector e_u lies in the row space iff u is resolved by step 1 or is a
unit pivot row of its component's reduced form. Rank is the number of peeled
pivots plus the component ranks.
"""

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _backend
from .field import DEFAULT_Q


class SparseRows:
    """Append-only list of sparse rows in triplet form."""

    def __init__(self, n_cols):
        self.n_cols = int(n_cols)
        self._r = []
        self._c = []
        self._v = []
        self.n_rows = 0

    def add(self, cols, vals):
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.uint64)
        self._r.append(np.full(cols.size, self.n_rows, dtype=np.int64))
        self._c.append(cols)
        self._v.append(vals)
        self.n_rows += 1
        return self.n_rows - 1

    def add_block(self, row_ids, cols, vals, count):
        """Append ``count`` rows at once; ``row_ids`` are 0-based within the block."""
        self._r.append(np.asarray(row_ids, dtype=np.int64) + self.n_rows)
        self._c.append(np.asarray(cols, dtype=np.int64))
        self._v.append(np.asarray(vals, dtype=np.uint64))
        self.n_rows += int(count)

    def triplets(self):
        if not self._r:
            z = np.zeros(0, dtype=np.int64)
            return z, z, np.zeros(0, dtype=np.uint64)
        return (np.concatenate(self._r), np.concatenate(self._c),
                np.concatenate(self._v))

    def copy(self):
        out = SparseRows(self.n_cols)
        out._r = list(self._r)
        out._c = list(self._c)
        out._v = list(self._v)
        out.n_rows = self.n_rows
        return out


def canonical_csr(rows, cols, vals, n_rows, n_cols, q=DEFAULT_Q, col_mask=None):
    """Merge duplicate (row, col) entries mod q and drop zeros.

    ``col_mask`` (boolean over columns) keeps only the selected columns.
    Returns ``(row_ptr, cols, vals)`` with columns sorted inside each row.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.uint64) % np.uint64(q)
    if col_mask is not None:
        keep = np.asarray(col_mask, dtype=bool)[cols]
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    key = rows * max(n_cols, 1) + cols
    order = np.argsort(key, kind="stable")
    key, rows, cols, vals = key[order], rows[order], cols[order], vals[order]
    if key.size:
        start = np.concatenate(([True], key[1:] != key[:-1]))
        idx = np.flatnonzero(start)
        # sums of < 2**31 values stay exact in uint64 for any realistic count
        vals = np.add.reduceat(vals, idx) % np.uint64(q)
        rows, cols = rows[idx], cols[idx]
        nz = vals != 0
        rows, cols, vals = rows[nz], cols[nz], vals[nz]
    row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n_rows), out=row_ptr[1:])
    return row_ptr, cols, vals


def _column_index(row_ptr, cols, n_cols):
    n_rows = len(row_ptr) - 1
    row_of = np.repeat(np.arange(n_rows, dtype=np.int64), np.diff(row_ptr))
    order = np.argsort(cols, kind="stable")
    col_rows = row_of[order]
    col_ptr = np.zeros(n_cols + 1, dtype=np.int64)
    np.cumsum(np.bincount(cols, minlength=n_cols), out=col_ptr[1:])
    return col_ptr, col_rows, row_of


def analyze(row_ptr, cols, vals, n_cols, q=DEFAULT_Q, kernels=None):
    """Return ``(resolved_mask, rank)`` for a canonical CSR matrix."""
    k = kernels or _backend
    n_rows = len(row_ptr) - 1
    resolved = np.zeros(n_cols, dtype=np.uint8)
    if n_rows == 0 or cols.size == 0:
        return resolved.astype(bool), 0
    col_ptr, col_rows, row_of = _column_index(row_ptr, cols, n_cols)
    pivots, remaining = k.peel(row_ptr, cols, col_ptr, col_rows, resolved)
    rank = int(pivots)

    res_rows = np.flatnonzero(np.asarray(remaining) >= 2)
    if res_rows.size == 0:
        return resolved.astype(bool), rank

    # entries of residual rows on unresolved columns
    sel = np.isin(row_of, res_rows) & (resolved[cols] == 0)
    er, ec, ev = row_of[sel], cols[sel], vals[sel]
    rmap = np.full(n_rows, -1, dtype=np.int64)
    rmap[res_rows] = np.arange(res_rows.size)
    ucols, ec_local = np.unique(ec, return_inverse=True)
    er_local = rmap[er]
    nr, nc = res_rows.size, ucols.size
    # bipartite graph: nodes 0..nr-1 are rows, nr.. are columns
    g = coo_matrix((np.ones(er_local.size, dtype=np.int8),
                    (er_local, nr + ec_local)), shape=(nr + nc, nr + nc))
    _, label = connected_components(g, directed=False)
    row_lab = label[:nr]

    ent_lab = row_lab[er_local]
    order = np.argsort(ent_lab, kind="stable")
    er_local, ec_local, ev, ent_lab = (er_local[order], ec_local[order],
                                       ev[order], ent_lab[order])
    bounds = np.flatnonzero(np.diff(ent_lab)) + 1
    starts = np.concatenate(([0], bounds))
    ends = np.concatenate((bounds, [ent_lab.size]))
    rows_per = np.bincount(row_lab, minlength=label.max() + 1)

    for s, e in zip(starts, ends):
        lab = ent_lab[s]
        if rows_per[lab] == 1:
            rank += 1  # one row on >= 2 unknowns resolves nothing
            continue
        lr, ri = np.unique(er_local[s:e], return_inverse=True)
        lc, ci = np.unique(ec_local[s:e], return_inverse=True)
        dense = np.zeros((lr.size, lc.size), dtype=np.uint64)
        dense[ri, ci] = ev[s:e]
        r, piv = k.rref_inplace(dense, q, lc.size, True)
        rank += int(r)
        for i in range(int(r)):
            if np.count_nonzero(dense[i]) == 1:
                resolved[ucols[lc[piv[i]]]] = 1
    return resolved.astype(bool), rank


def analyze_rows(store, q=DEFAULT_Q, col_mask=None, kernels=None):
    """Convenience wrapper over a :class:`SparseRows`."""
    r, c, v = store.triplets()
    row_ptr, cols, vals = canonical_csr(r, c, v, store.n_rows, store.n_cols,
                                        q, col_mask)
    return analyze(row_ptr, cols, vals, store.n_cols, q, kernels)
