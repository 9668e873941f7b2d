"""Exact linear algebra over a prime field GF(q).

Matrices are plain ``numpy.uint64`` arrays with entries in ``[0, q)``. The
default modulus is the Mersenne prime 2**31 - 1, large enough that a random
nonzero element stands in for a continuously distributed channel gain: any
fixed polynomial identity fails with probability at most degree/q.
"""

import numpy as np

from . import _backend

DEFAULT_Q = 2**31 - 1


def check_modulus(q):
    q = int(q)
    if q < 2 or q >= 2**31:
        raise ValueError(f"field modulus must be a prime in [2, 2**31), got {q}")
    return q


def as_field_matrix(rows, q=DEFAULT_Q, ncols=None):
    """Coerce ``rows`` into a C-contiguous uint64 matrix reduced mod q."""
    if isinstance(rows, np.ndarray) and rows.dtype == np.uint64:
        out = rows % np.uint64(q)
    else:
        rows = [[int(x) % q for x in row] for row in rows]
        width = len(rows[0]) if rows else (ncols or 0)
        out = np.array(rows, dtype=np.uint64).reshape(len(rows), width)
    if out.ndim != 2:
        raise ValueError("expected a 2-D array of field elements")
    return np.ascontiguousarray(out)


def random_nonzero(rng, size, q=DEFAULT_Q):
    """Uniform draws from [1, q-1]."""
    return rng.integers(1, q, size=size, dtype=np.uint64)


def inverse(x, q=DEFAULT_Q):
    x = int(x) % q
    if x == 0:
        raise ZeroDivisionError("zero has no inverse in GF(q)")
    return pow(x, q - 2, q)


def rank(m, q=DEFAULT_Q):
    """Dimension of the row space of ``m``."""
    a = as_field_matrix(m, q)
    if a.size == 0:
        return 0
    r, _ = _backend.rref_inplace(a, q, a.shape[1], False)
    return int(r)


def rref(m, q=DEFAULT_Q, pivot_cols=None):
    """Reduced row echelon form; returns ``(matrix, pivot_columns)``.

    Only columns below ``pivot_cols`` are eligible as pivots, which lets a
    caller carry an augmented block to the right.
    """
    a = as_field_matrix(m, q).copy()
    if a.size == 0:
        return a, np.zeros(0, dtype=np.int64)
    if pivot_cols is None:
        pivot_cols = a.shape[1]
    r, piv = _backend.rref_inplace(a, q, int(pivot_cols), True)
    return a, np.asarray(piv, dtype=np.int64)


def solve_subset(store, targets, q=DEFAULT_Q):
    """Express unit vectors as combinations of the rows of ``store``.

    Returns a dict mapping each target column to either ``None`` (the unit
    vector is not in the row space) or a dict ``{row_index: coefficient}``
    whose weighted sum of store rows equals that unit vector exactly.
    """
    a = as_field_matrix(store, q)
    n, width = a.shape
    aug = np.zeros((n, width + n), dtype=np.uint64)
    aug[:, :width] = a
    aug[np.arange(n), width + np.arange(n)] = 1
    red, pivots = rref(aug, q, pivot_cols=width)
    pivot_row = {int(c): i for i, c in enumerate(pivots)}
    out = {}
    for u in targets:
        u = int(u)
        i = pivot_row.get(u)
        if i is None:
            out[u] = None
            continue
        body = red[i, :width]
        if np.count_nonzero(body) != 1:
            out[u] = None
            continue
        combo = red[i, width:]
        out[u] = {int(k): int(combo[k]) for k in np.flatnonzero(combo)}
    return out


def projection_dimension(desired, interference, q=DEFAULT_Q):
    """dim of colspan(desired) projected off colspan(interference).

    Computed as rank([desired | interference]) - rank(interference).
    """
    d = as_field_matrix(desired, q)
    i = as_field_matrix(interference, q)
    if d.shape[0] != i.shape[0]:
        raise ValueError("desired and interference must have equal row counts")
    return rank(np.hstack([d, i]), q) - rank(i, q)
