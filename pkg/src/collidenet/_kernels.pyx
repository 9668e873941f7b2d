# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False, language_level=3
"""Compiled kernels: modular row reduction and sparse peeling.

Both functions mirror ``_pykernels`` exactly; the pure-Python versions are the
reference the test suite compares against.
"""
import numpy as np

from libc.stdint cimport int64_t, uint8_t, uint64_t

cdef uint64_t MERSENNE31 = 2147483647ULL


cdef inline uint64_t _mred(uint64_t x) noexcept nogil:
    x = (x & MERSENNE31) + (x >> 31)
    x = (x & MERSENNE31) + (x >> 31)
    if x >= MERSENNE31:
        x -= MERSENNE31
    return x


cdef inline uint64_t _powmod(uint64_t b, uint64_t e, uint64_t q) noexcept nogil:
    cdef uint64_t r = 1
    b %= q
    while e:
        if e & 1:
            r = (r * b) % q
        b = (b * b) % q
        e >>= 1
    return r


cdef inline void _axpy(uint64_t[:, ::1] a, Py_ssize_t dst, Py_ssize_t src,
                       uint64_t f, Py_ssize_t c0, Py_ssize_t m,
                       uint64_t q, bint mers) noexcept nogil:
    # a[dst, c0:] += f * a[src, c0:]  (mod q)
    cdef Py_ssize_t j
    cdef uint64_t *d = &a[dst, 0]
    cdef uint64_t *s = &a[src, 0]
    if mers:
        for j in range(c0, m):
            d[j] = _mred(d[j] + f * s[j])
    else:
        for j in range(c0, m):
            d[j] = (d[j] + f * s[j]) % q


def rref_inplace(uint64_t[:, ::1] a, uint64_t q, Py_ssize_t pivot_cols, bint full):
    """Row-reduce ``a`` in place over GF(q), pivoting on columns < pivot_cols.

    Row operations act on every column, so trailing columns may carry an
    augmented block. With ``full`` the result is reduced echelon form with unit
    pivots; otherwise only rows below each pivot are cleared.

    Returns ``(rank, pivot_columns)``.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = a.shape[1]
    cdef Py_ssize_t r = 0, c, i, j, piv, start
    cdef uint64_t inv, f, tmp
    cdef bint mers = q == MERSENNE31
    if pivot_cols > m:
        pivot_cols = m
    pivots = np.empty(max(min(n, pivot_cols), 0), dtype=np.int64)
    cdef int64_t[::1] pv = pivots
    with nogil:
        for c in range(pivot_cols):
            if r == n:
                break
            piv = -1
            for i in range(r, n):
                if a[i, c] != 0:
                    piv = i
                    break
            if piv < 0:
                continue
            if piv != r:
                for j in range(c, m):
                    tmp = a[piv, j]
                    a[piv, j] = a[r, j]
                    a[r, j] = tmp
            if a[r, c] != 1:
                inv = _powmod(a[r, c], q - 2, q)
                for j in range(c, m):
                    a[r, j] = (a[r, j] * inv) % q
            start = 0 if full else r + 1
            for i in range(start, n):
                if i == r:
                    continue
                f = a[i, c]
                if f == 0:
                    continue
                _axpy(a, i, r, q - f, c, m, q, mers)
            pv[r] = c
            r += 1
    return r, pivots[:r]


def peel(const int64_t[::1] row_ptr, const int64_t[::1] cols,
         const int64_t[::1] col_ptr, const int64_t[::1] col_rows,
         uint8_t[::1] resolved):
    """Resolve unknowns reachable by repeated single-unknown substitution.

    ``resolved`` is updated in place. Returns ``(pivots, remaining)`` where
    ``remaining[r]`` counts row r's still-unresolved unknowns.
    """
    cdef Py_ssize_t n_rows = row_ptr.shape[0] - 1
    remaining = np.zeros(n_rows, dtype=np.int64)
    cdef int64_t[::1] cnt = remaining
    stack_arr = np.empty(max(n_rows, 1), dtype=np.int64)
    cdef int64_t[::1] stack = stack_arr
    cdef Py_ssize_t top = 0, r, k, u, s
    cdef int64_t pivots = 0
    with nogil:
        for r in range(n_rows):
            for k in range(row_ptr[r], row_ptr[r + 1]):
                if not resolved[cols[k]]:
                    cnt[r] += 1
            if cnt[r] == 1:
                stack[top] = r
                top += 1
        while top > 0:
            top -= 1
            r = stack[top]
            if cnt[r] != 1:
                continue
            u = -1
            for k in range(row_ptr[r], row_ptr[r + 1]):
                if not resolved[cols[k]]:
                    u = cols[k]
                    break
            resolved[u] = 1
            pivots += 1
            for k in range(col_ptr[u], col_ptr[u + 1]):
                s = col_rows[k]
                cnt[s] -= 1
                if cnt[s] == 1:
                    stack[top] = s
                    top += 1
    return int(pivots), remaining
