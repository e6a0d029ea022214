"""Normalization passes run ahead of the quotient machinery.

The decomposition identities assume binary gates, and the balancing pass
assumes products put their lighter child on the left.  Both passes preserve
the computed polynomial and the multi-k-ic status for every k: splitting a
fan-in left-associatively only regroups an associative operation, and
swapping the children of a product uses commutativity.
"""

from .analysis import compute_var
from .circuit import CONST, INPUT, MUL, Circuit, Gate, require_valid


def normalize_fanin2(circuit: Circuit) -> Circuit:
    """Rewrite so every add/mul gate has fan-in exactly 2.

    Fan-in-1 gates are contracted; larger fan-ins split left-associatively,
    e.g. add(a, b, c) becomes add(add(a, b), c).  An already binary circuit
    comes back structurally identical.
    """
    require_valid(circuit)
    gates = []
    remap = {}
    for i, g in enumerate(circuit.gates):
        if g.kind in (INPUT, CONST):
            remap[i] = len(gates)
            gates.append(g)
            continue
        kids = [remap[c] for c in g.children]
        if len(kids) == 1:
            remap[i] = kids[0]
            continue
        acc = kids[0]
        for c in kids[1:]:
            gates.append(Gate(g.kind, children=(acc, c)))
            acc = len(gates) - 1
        remap[i] = acc
    return Circuit(
        circuit.n,
        gates,
        remap[circuit.output],
        field=circuit.field,
        name=circuit.name,
    )


def make_right_heavy(circuit: Circuit) -> Circuit:
    """Swap product children so the right child always carries at least as
    much Var mass as the left; ties keep the original order."""
    require_valid(circuit)
    table = compute_var(circuit)
    gates = []
    changed = False
    for g in circuit.gates:
        if g.kind == MUL and len(g.children) == 2:
            left, right = g.children
            if table.total(left) > table.total(right):
                g = Gate(MUL, children=(right, left))
                changed = True
        gates.append(g)
    if not changed:
        return circuit
    return Circuit(
        circuit.n, gates, circuit.output, field=circuit.field, name=circuit.name
    )


def normalized(circuit: Circuit) -> Circuit:
    """Binary fan-in followed by the right-heavy pass."""
    return make_right_heavy(normalize_fanin2(circuit))
