"""Pure-Python/numpy versions of the compiled kernels (same signatures)."""

import numpy as np


def rref_inplace(a, q, pivot_cols, full):
    n, m = a.shape
    q = np.uint64(q)
    pivot_cols = min(pivot_cols, m)
    pivots = []
    r = 0
    for c in range(pivot_cols):
        if r == n:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            a[[r, piv], c:] = a[[piv, r], c:]
        lead = int(a[r, c])
        if lead != 1:
            inv = np.uint64(pow(lead, int(q) - 2, int(q)))
            a[r, c:] = a[r, c:] * inv % q
        col = a[:, c] if full else a[r + 1:, c]
        rows = np.flatnonzero(col)
        if not full:
            rows = rows + (r + 1)
        rows = rows[rows != r]
        if rows.size:
            f = q - a[rows, c]
            a[rows, c:] = (a[rows, c:] + f[:, None] * a[r, c:]) % q
        pivots.append(c)
        r += 1
    return r, np.asarray(pivots, dtype=np.int64)


def peel(row_ptr, cols, col_ptr, col_rows, resolved):
    n_rows = len(row_ptr) - 1
    remaining = np.zeros(n_rows, dtype=np.int64)
    row_ptr = row_ptr.tolist()
    cols = cols.tolist()
    col_ptr = col_ptr.tolist()
    col_rows = col_rows.tolist()
    res = resolved.tolist()
    cnt = [0] * n_rows
    stack = []
    for r in range(n_rows):
        c = 0
        for k in range(row_ptr[r], row_ptr[r + 1]):
            if not res[cols[k]]:
                c += 1
        cnt[r] = c
        if c == 1:
            stack.append(r)
    pivots = 0
    while stack:
        r = stack.pop()
        if cnt[r] != 1:
            continue
        for k in range(row_ptr[r], row_ptr[r + 1]):
            u = cols[k]
            if not res[u]:
                break
        res[u] = 1
        pivots += 1
        for k in range(col_ptr[u], col_ptr[u + 1]):
            s = col_rows[k]
            cnt[s] -= 1
            if cnt[s] == 1:
                stack.append(s)
    resolved[:] = np.asarray(res, dtype=np.uint8)
    remaining[:] = cnt
    return pivots, remaining
