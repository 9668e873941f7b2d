"""The two coding opportunities, applied between Phase 1 and Phase 2.

Type-I (delivery with side information): a case-1 collision (a1, b1) plus
interference-free packets a2, b2 become the two common packets a1+a2 and
b1+b2.

Type-II (interference delivery with side information): per transmitter, a
packet the other receiver needs to clear a collision is summed with a packet
its own receiver still needs; each receiver already knows one of the two.

Whatever cannot be paired goes to the common queue uncoded.
"""

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConfigError
from .queues import PacketRecord, QueueTag as T


@dataclass
class CombinationPlan:
    type1_pairs: int = 0
    type2_pairs: dict = field(default_factory=lambda: {1: 0, 2: 0})
    leftovers: dict = field(default_factory=lambda: {1: 0, 2: 0})
    events: list = field(default_factory=list)  # (kind, tx, coded label, part labels)


def _sum_record(owner, parts):
    coeffs = {}
    for rec in parts:
        for c, x in rec.coeffs.items():
            coeffs[c] = coeffs.get(c, 0) + x
    coeffs = {c: x for c, x in coeffs.items() if x}
    label = "+".join(r.label for r in parts)
    return PacketRecord(owner, label, coeffs, synthetic=all(r.synthetic for r in parts))


def apply_type1(queues, plan=None):
    plan = plan if plan is not None else CombinationPlan()
    c1a, c1b = queues[1, T.C1], queues[2, T.C1]
    if len(c1a) != len(c1b):
        raise ValueError("C1 queues must have equal length")
    sa, sb = queues[1, T.SIDE_OWN], queues[2, T.SIDE_OWN]
    while c1a and sa and sb:
        a1, b1 = c1a.popleft(), c1b.popleft()
        a2, b2 = sa.popleft(), sb.popleft()
        ca, cb = _sum_record(1, (a1, a2)), _sum_record(2, (b1, b2))
        queues.push(1, T.COMMON, ca)
        queues.push(2, T.COMMON, cb)
        for i, r in ((1, a1), (1, a2), (2, b1), (2, b2)):
            queues.push(i, T.FINAL, r)
        plan.type1_pairs += 1
        plan.events.append(("type1", 0, ca.label + "|" + cb.label, (a1.label, a2.label, b1.label, b2.label)))
    # fallback: collided pairs without side packets. Delivering one side of the
    # pair to both receivers resolves the collision; the partner then counts
    # as delivered. Alternate which side is sent.
    k = 0
    while c1a:
        a1, b1 = c1a.popleft(), c1b.popleft()
        send, keep, i = (a1, b1, 1) if k % 2 == 0 else (b1, a1, 2)
        queues.push(i, T.COMMON, send)
        queues.push(3 - i, T.FINAL, keep)
        plan.leftovers[i] += 1
        plan.events.append(("c1_raw", i, send.label, (a1.label, b1.label)))
        k += 1
    return plan


def apply_type2(queues, plan=None):
    plan = plan if plan is not None else CombinationPlan()
    for i in (1, 2):
        other, own = queues[i, T.SIDE_OTHER], queues[i, T.SIDE_OWN]
        while other and own:
            x, y = other.popleft(), own.popleft()
            c = _sum_record(i, (x, y))
            queues.push(i, T.COMMON, c)
            queues.push(i, T.FINAL, x)
            queues.push(i, T.FINAL, y)
            plan.type2_pairs[i] += 1
            plan.events.append(("type2", i, c.label, (x.label, y.label)))
        for d in (other, own):
            while d:
                r = d.popleft()
                queues.push(i, T.COMMON, r)
                plan.leftovers[i] += 1
                plan.events.append(("raw", i, r.label, (r.label,)))
    return plan


def combine(queues):
    """Type-I, then Type-II, then raw fallback. Mutates ``queues``."""
    plan = CombinationPlan()
    apply_type1(queues, plan)
    apply_type2(queues, plan)
    return plan


def conventional_cost_vs_coded_cost(p=Fraction(1, 2)):
    """Average slots to deliver a1, b1, a2, b2 of the Type-I example.

    Uncoded: the two interference-free packets go out in parallel on their
    own links (1/p slots for the pair) and one of a1/b1 goes out as a common
    packet, 1/(1-(1-p)^2) slots. Coded: two common packets.
    """
    p = p if isinstance(p, Fraction) else Fraction(str(p))
    if p != Fraction(1, 2):
        raise ConfigError("the cost comparison is only defined for p = 1/2")
    common = 1 / (1 - (1 - p) ** 2)
    conventional = 1 / p + common
    coded = 2 * common
    return {"conventional": conventional, "coded": coded,
            "improvement": 1 - coded / conventional}
