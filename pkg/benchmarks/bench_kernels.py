"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times dense elimination (the Phase-2 segment rank check and the dense part of
decoding) and peeling (the sparse part of decoding) on inputs shaped like
the ones a simulation produces.
"""

import argparse
import time

import numpy as np

from collidenet import _backend
from collidenet.sparse import _column_index, canonical_csr

Q = 2**31 - 1


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def rref_case(n, rng):
    a = rng.integers(1, Q, (n + n // 3, n), dtype=np.uint64)
    return lambda k: k.rref_inplace(a.copy(), Q, n, False)


def peel_case(n_cols, rng):
    # mostly two-entry rows, like Phase-1 receptions
    n_rows = n_cols
    r = np.repeat(np.arange(n_rows), 2)
    c = rng.integers(0, n_cols, 2 * n_rows)
    c[::2] = np.arange(n_rows) % n_cols
    v = rng.integers(1, Q, 2 * n_rows).astype(np.uint64)
    row_ptr, cols, _ = canonical_csr(r, c, v, n_rows, n_cols, Q)
    col_ptr, col_rows, _ = _column_index(row_ptr, cols, n_cols)

    def run(k):
        k.peel(row_ptr, cols, col_ptr, col_rows, np.zeros(n_cols, np.uint8))
    return run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    names = _backend.available_backends()
    cases = [(f"rref {n}x{n}", rref_case(n, rng)) for n in (64, 256, 512)]
    cases += [(f"peel {n} cols", peel_case(n, rng)) for n in (10_000, 100_000)]
    print(f"{'kernel':<18}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}")
    for label, fn in cases:
        times = {n: _best(lambda: fn(_backend.get_backend(n)), args.repeat) for n in names}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:<18}" + "".join(f"{times[n]:>11.4f}s" for n in names) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
