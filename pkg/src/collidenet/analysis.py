"""Closed-form regions, finite-m predictions and statistical checks."""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CausalityError, ConfigError
from .sparse import analyze, canonical_csr


def _frac(x):
    return x if isinstance(x, Fraction) else Fraction(str(x))


class ThroughputRegion:
    """{(R1, R2) >= 0 : c1 R1 + c2 R2 <= rhs for every half-plane}.

    Half-planes are (c1, c2, rhs) or (c1, c2, rhs, id); arithmetic is exact.
    """

    def __init__(self, halfplanes, name=""):
        self.name = name
        hp = []
        for k, h in enumerate(halfplanes):
            c1, c2, rhs = (_frac(x) for x in h[:3])
            cid = h[3] if len(h) > 3 else f"h{k}"
            if (c1, c2, rhs) not in [x[:3] for x in hp]:
                hp.append((c1, c2, rhs, cid))
        self.halfplanes = hp
        self._all = hp + [(Fraction(-1), Fraction(0), Fraction(0), "R1>=0"),
                          (Fraction(0), Fraction(-1), Fraction(0), "R2>=0")]
        self.vertices = self._enumerate()

    def contains(self, point, tol=0):
        x, y = point
        return all(c1 * x + c2 * y <= rhs + tol for c1, c2, rhs, _ in self._all)

    def active(self, point):
        x, y = point
        return [cid for c1, c2, rhs, cid in self._all if c1 * x + c2 * y == rhs]

    def _enumerate(self):
        pts = set()
        cons = self._all
        for i in range(len(cons)):
            for j in range(i + 1, len(cons)):
                a1, b1, r1, _ = cons[i]
                a2, b2, r2, _ = cons[j]
                det = a1 * b2 - a2 * b1
                if det == 0:
                    continue
                x = (r1 * b2 - r2 * b1) / det
                y = (a1 * r2 - a2 * r1) / det
                if self.contains((x, y)):
                    pts.add((x, y))

        def key(v):
            x, y = v
            if x == 0 and y == 0:
                return (-1.0, 0)
            return (math.atan2(y, x), float(x * x + y * y))
        return sorted(pts, key=key)

    def vertex_floats(self):
        return [(float(x), float(y)) for x, y in self.vertices]

    def csv_rows(self, p):
        """(p, vertex_x, vertex_y, constraint_id) rows for plotting."""
        return [(float(p), float(x), float(y), ";".join(self.active((x, y))))
                for x, y in self.vertices]

    def __repr__(self):
        return f"ThroughputRegion({self.name!r}, vertices={self.vertex_floats()})"


def _check_p(p):
    p = _frac(p)
    if not (0 <= p <= 1):
        raise ConfigError(f"probability must lie in [0, 1], got {p}")
    return p


def capacity_region(p):
    """R_i <= p and R_i + (2-p) R_i' <= p (2-p)^2 for both orderings."""
    p = _check_p(p)
    s = p * (2 - p) ** 2
    return ThroughputRegion([
        (1, 0, p, "R1<=p"),
        (0, 1, p, "R2<=p"),
        (1, 2 - p, s, "R1+(2-p)R2"),
        (2 - p, 1, s, "(2-p)R1+R2"),
    ], name="capacity")


def tdma_region(p):
    p = _check_p(p)
    return ThroughputRegion([(1, 1, p, "sum<=p")], name="tdma")


def rateless_region(p):
    p = _check_p(p)
    return ThroughputRegion([
        (1, 0, p, "R1<=p"),
        (0, 1, p, "R2<=p"),
        (1, 1, 1 - (1 - p) ** 2, "sum<=1-(1-p)^2"),
    ], name="rateless")


def _m23(m):
    from .queues import m23
    return m23(m)


def _ceil(x):
    from .queues import ceil_exact
    return ceil_exact(x)


def predict_total_time(m):
    """Slots used by the paper-mode scheme at p = 1/2, with ceilings."""
    m = int(m)
    if m == 0:
        return {"phase1": 0, "phase2": 0, "total": 0, "throughput": Fraction(0)}
    s = _m23(m)
    phase1 = _ceil(Fraction(4, 3) * m + s)
    phase2 = _ceil((Fraction(2, 3) * m + Fraction(16, 3) * s) / Fraction(3, 4))
    total = phase1 + phase2
    return {"phase1": phase1, "phase2": phase2, "total": total,
            "throughput": Fraction(m, total)}


def limit_throughput():
    """m / total as m grows: 1 / (4/3 + 8/9) = 9/20."""
    return 1 / (Fraction(4, 3) + Fraction(2, 3) / Fraction(3, 4))


@dataclass
class PrecoderTrace:
    """Tx1's precoding rows over one block of n slots.

    ``rows`` holds triplets (slot, column, value) over Tx1's m1 packets.
    ``decided_at[t]`` is the latest slot whose channel state the row at t
    depends on.
    """
    n: int
    m1: int
    alphas: np.ndarray  # (n, 4)
    gains: np.ndarray  # (n, 4)
    rows: tuple
    decided_at: np.ndarray


@dataclass
class Lemma2Result:
    p: float
    trials: int
    lhs: float
    rhs: float
    margin: float
    stderr: float

    @property
    def holds(self):
        return self.margin >= -3 * self.stderr


def _selected_rank(trace, link, q):
    r, c, v = trace.rows
    keep = trace.alphas[r, link] == 1
    r, c, v = r[keep], c[keep], v[keep]
    v = v * trace.gains[r, link] % np.uint64(q)
    row_ptr, cols, vals = canonical_csr(r, c, v, trace.n, trace.m1, q)
    return analyze(row_ptr, cols, vals, trace.m1, q)[1]


def trace_ranks(trace, q):
    """(rank of G12 V1, rank of G11 V1) for one trace."""
    t = np.arange(trace.n)
    if np.any(np.asarray(trace.decided_at) >= t):
        raise CausalityError("a precoding row uses same-slot or future channel state")
    return _selected_rank(trace, 1, q), _selected_rank(trace, 0, q)


def lemma2_check(traces, p, q=None):
    """Compare E[rank G12 V1] with E[rank G11 V1]/(2-p) over traces.

    The standard error is that of the per-trace paired difference.
    """
    from .field import DEFAULT_Q
    q = q or DEFAULT_Q
    p = float(p)
    lhs, rhs = [], []
    for tr in traces:
        a, b = trace_ranks(tr, q)
        lhs.append(a)
        rhs.append(b / (2 - p))
    lhs, rhs = np.asarray(lhs, float), np.asarray(rhs, float)
    n = lhs.size
    diff = lhs - rhs
    se = float(diff.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Lemma2Result(p, n, float(lhs.mean()), float(rhs.mean()),
                        float(diff.mean()), se)


def repetition_trace(p, n, rng, q=None):
    """Tx1 repeats each packet until its own receiver hears it."""
    from .channel import sample_states
    from .field import DEFAULT_Q
    alphas, gains = sample_states(p, rng, n, q or DEFAULT_Q)
    delivered = np.concatenate(([0], np.cumsum(alphas[:, 0])[:-1]))
    slots = np.arange(n)
    return PrecoderTrace(n, n, alphas, gains,
                         (slots, delivered.astype(np.int64), np.ones(n, np.uint64)),
                         slots - 1)


def chernoff_bound(alpha, variances):
    """min(1, 2 exp(-alpha^2 / (4 sum Var)))."""
    alpha = float(alpha)
    var = float(np.sum(variances))
    if alpha < 0 or var < 0 or np.any(np.asarray(variances, float) < 0):
        raise ValueError("alpha and variances must be nonnegative")
    if var == 0:
        return 0.0 if alpha > 0 else 1.0
    return min(1.0, 2.0 * math.exp(-alpha * alpha / (4.0 * var)))


def phase1_halting_bound(m):
    """Bound on an initial queue outliving the deadline, both transmitters.

    Stay indicators over the phase-1 slots have total variance
    m/4 + (3/16) m^{2/3} at p = 1/2 and the allowed deviation is m^{2/3}.
    """
    s = float(_m23(m))
    return min(1.0, 2 * chernoff_bound(s, [m / 4 + 3 * s / 16]))
