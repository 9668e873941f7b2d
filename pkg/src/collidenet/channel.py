"""Channel states: Bernoulli link indicators, gains, and the 16-case table.

A state is the quadruple (a11, a12, a21, a22) where a_ji = 1 means the link
from transmitter j to receiver i is on in this slot. Gains are uniform
nonzero field elements, resampled every slot.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .field import DEFAULT_Q, random_nonzero

# (a11, a12, a21, a22) -> case index
CASE_TABLE = {
    (1, 1, 1, 1): 1,
    (1, 1, 0, 1): 2,
    (1, 0, 1, 1): 3,
    (1, 0, 0, 1): 4,
    (1, 0, 0, 0): 5,
    (1, 1, 0, 0): 6,
    (1, 0, 1, 0): 7,
    (1, 1, 1, 0): 8,
    (0, 0, 0, 1): 9,
    (0, 0, 1, 1): 10,
    (0, 1, 0, 1): 11,
    (0, 1, 1, 1): 12,
    (0, 0, 1, 0): 13,
    (0, 1, 0, 0): 14,
    (0, 1, 1, 0): 15,
    (0, 0, 0, 0): 16,
}
QUADRUPLE_OF = {c: q for q, c in CASE_TABLE.items()}

# lookup by 4-bit code a11*8 + a12*4 + a21*2 + a22
CASE_BY_CODE = np.zeros(16, dtype=np.int8)
for _quad, _case in CASE_TABLE.items():
    CASE_BY_CODE[_quad[0] * 8 + _quad[1] * 4 + _quad[2] * 2 + _quad[3]] = _case
del _quad, _case


def check_probability(p):
    p = float(p)
    if not (0.0 <= p <= 1.0) or p != p:
        raise ConfigError(f"probability must lie in [0, 1], got {p}")
    return p


def mirror_quadruple(alpha):
    """Swap user ids: (a11, a12, a21, a22) -> (a22, a21, a12, a11)."""
    a11, a12, a21, a22 = alpha
    return (a22, a21, a12, a11)


def mirror_case(case):
    return CASE_TABLE[mirror_quadruple(QUADRUPLE_OF[case])]


def case_codes(alphas):
    """Vectorized 4-bit code of an (n, 4) alpha array."""
    a = np.asarray(alphas, dtype=np.int64)
    return a[:, 0] * 8 + a[:, 1] * 4 + a[:, 2] * 2 + a[:, 3]


def case_of(state):
    """Case index 1..16 of a ChannelState or a raw quadruple."""
    alpha = state.alpha if isinstance(state, ChannelState) else tuple(int(x) for x in state)
    try:
        return CASE_TABLE[alpha]
    except KeyError:
        raise ValueError(f"not a binary quadruple: {alpha!r}") from None


@dataclass(frozen=True)
class ChannelState:
    alpha: tuple  # (a11, a12, a21, a22)
    gains: tuple = (1, 1, 1, 1)  # (g11, g12, g21, g22)

    def __post_init__(self):
        if len(self.alpha) != 4 or any(a not in (0, 1) for a in self.alpha):
            raise ValueError(f"alphas must be four bits, got {self.alpha!r}")
        if len(self.gains) != 4 or any(int(g) == 0 for g in self.gains):
            raise ValueError("gains must be four nonzero field elements")

    @property
    def case(self):
        return CASE_TABLE[self.alpha]

    def link(self, j, i):
        """(alpha_ji, g_ji) for transmitter j -> receiver i (1-based)."""
        k = (j - 1) * 2 + (i - 1)
        return self.alpha[k], self.gains[k]

    def mirrored(self):
        g11, g12, g21, g22 = self.gains
        return ChannelState(mirror_quadruple(self.alpha), (g22, g21, g12, g11))


@dataclass(frozen=True)
class LinkMeasurement:
    """Per-receiver link qualities in dB against a decoding threshold."""
    sinr_own: float
    sinr_cross: float
    snr_own: float
    snr_cross: float
    gamma: float

    def __post_init__(self):
        if self.snr_own < self.sinr_own or self.snr_cross < self.sinr_cross:
            raise ValueError("SNR cannot be below SINR on the same link")


def classify_receiver_state(m):
    """Receiver state 1..4 from a LinkMeasurement.

    1: own packet decodable; 2: the other packet decodable; 3: both links
    strong but colliding, store the combination; 4: discard. When both SINRs
    clear the threshold the own signal wins.
    """
    if m.sinr_own >= m.gamma:
        return 1
    if m.sinr_cross >= m.gamma:
        return 2
    if m.snr_own >= m.gamma and m.snr_cross >= m.gamma:
        return 3
    return 4


def sample_states(p, rng, n, q=DEFAULT_Q):
    """``n`` i.i.d. slots as ``(alphas uint8 (n,4), gains uint64 (n,4))``."""
    p = check_probability(p)
    alphas = (rng.random((n, 4)) < p).astype(np.uint8)
    gains = random_nonzero(rng, (n, 4), q)
    return alphas, gains


def sample_state(p, rng, q=DEFAULT_Q):
    a, g = sample_states(p, rng, 1, q)
    return ChannelState(tuple(int(x) for x in a[0]), tuple(int(x) for x in g[0]))


class ChannelStream:
    """One trial's channel realization, drawn lazily in fixed-size blocks.

    Blocks have a fixed size so the realization at slot t does not depend on
    how callers chunk their reads; Phase 2 picks up exactly where Phase 1
    stopped.
    """

    BLOCK = 4096

    def __init__(self, p, rng, q=DEFAULT_Q, keep_history=False):
        self.p = check_probability(p)
        self.keep_history = keep_history
        self.rng = rng
        self.q = q
        self._alphas = np.zeros((0, 4), dtype=np.uint8)
        self._gains = np.zeros((0, 4), dtype=np.uint64)
        self.position = 0  # absolute index of the next unconsumed slot
        self._base = 0  # absolute index of _alphas[0]

    def _ensure(self, upto):
        need = upto - (self._base + len(self._alphas))
        if need <= 0:
            return
        nblocks = -(-need // self.BLOCK)
        a_parts, g_parts = [self._alphas], [self._gains]
        for _ in range(nblocks):
            a, g = sample_states(self.p, self.rng, self.BLOCK, self.q)
            a_parts.append(a)
            g_parts.append(g)
        self._alphas = np.concatenate(a_parts)
        self._gains = np.concatenate(g_parts)

    def peek(self, n):
        """Next ``n`` slots without consuming them."""
        self._ensure(self.position + n)
        lo = self.position - self._base
        return self._alphas[lo:lo + n], self._gains[lo:lo + n]

    def consume(self, n):
        self._ensure(self.position + n)
        self.position += n
        # drop history we will never need again
        drop = (self.position - self._base) // self.BLOCK * self.BLOCK
        if drop and not self.keep_history:
            self._alphas = self._alphas[drop:]
            self._gains = self._gains[drop:]
            self._base += drop

    def history(self, lo, hi):
        """Slots [lo, hi) of the realization; needs ``keep_history``."""
        if lo < self._base:
            raise ValueError("history before the retained window")
        self._ensure(hi)
        return self._alphas[lo - self._base:hi - self._base], self._gains[lo - self._base:hi - self._base]

    def take(self, n):
        a, g = self.peek(n)
        a, g = a.copy(), g.copy()
        self.consume(n)
        return a, g


class ScriptedStream(ChannelStream):
    """A stream that replays fixed alphas (gains random unless given)."""

    def __init__(self, alphas, rng=None, gains=None, q=DEFAULT_Q, p=0.5):
        super().__init__(p, rng if rng is not None else np.random.default_rng(0), q)
        self._alphas = np.asarray(alphas, dtype=np.uint8).reshape(-1, 4)
        n = len(self._alphas)
        self._gains = (np.asarray(gains, dtype=np.uint64).reshape(-1, 4) if gains is not None
                       else random_nonzero(self.rng, (n, 4), q))

    def _ensure(self, upto):
        if upto > self._base + len(self._alphas):
            # past the script every link is off
            extra = upto - self._base - len(self._alphas)
            self._alphas = np.concatenate([self._alphas, np.zeros((extra, 4), np.uint8)])
            self._gains = np.concatenate([self._gains, np.ones((extra, 4), np.uint64)])
