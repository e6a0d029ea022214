"""Ground truth: proof-tree enumeration, randomized equivalence testing and
structural/bound reporting.

The exact oracle (:func:`circflat.expand.brute_force_expand`) and the
proof-tree enumerator here are independent routes to the same polynomial:
the value of a gate is the sum of the values of all proof-trees rooted at
it.  Cross-checking the two on small circuits validates both; randomized
evaluation at points of a large prime field covers everything bigger.
"""

import itertools
import math
import random
from dataclasses import dataclass
from typing import List, Optional, Tuple

from . import backends
from .analysis import compute_var
from .circuit import ADD, CONST, INPUT, MUL, Circuit
from .errors import IncompatibleArity, TooManyProofTrees
from .expand import DEFAULT_BUDGET, brute_force_expand, expansion_bound
from .sparse import SparsePolynomial

# ---------------------------------------------------------------------------
# proof-tree enumeration
# ---------------------------------------------------------------------------


def count_proof_trees(circuit: Circuit, root: int, snip: Optional[int] = None) -> int:
    """Number of (snipped) proof-trees rooted at ``root``, by a counting
    sweep; exact in arbitrary precision."""
    plain = [0] * (root + 1)
    for g in range(root + 1):
        gate = circuit.gates[g]
        if gate.kind in (INPUT, CONST):
            plain[g] = 1
        elif gate.kind == ADD:
            plain[g] = sum(plain[c] for c in gate.children)
        else:
            prod = 1
            for c in gate.children:
                prod *= plain[c]
            plain[g] = prod
    if snip is None:
        return plain[root]
    snipped = [0] * (root + 1)
    for g in range(root + 1):
        if g == snip:
            snipped[g] = 1
            continue
        gate = circuit.gates[g]
        if gate.kind == ADD:
            snipped[g] = sum(snipped[c] for c in gate.children)
        elif gate.kind == MUL:
            prod = snipped[gate.children[-1]]
            for c in gate.children[:-1]:
                prod *= plain[c]
            snipped[g] = prod
    return snipped[root]


class _TreeEnumerator:
    """Materializes every (snipped) proof-tree as a monomial plus its
    rightmost path.  Choice order follows child order, so the output is
    deterministic."""

    def __init__(self, circuit: Circuit, snip: Optional[int]):
        self.c = circuit
        self.snip = snip
        self.zero = (0,) * circuit.n
        self.plain_memo = {}
        self.snip_memo = {}

    def plain(self, g: int) -> list:
        if g in self.plain_memo:
            return self.plain_memo[g]
        gate = self.c.gates[g]
        p = self.c.field.p
        if gate.kind == INPUT:
            exps = tuple(1 if i == gate.var - 1 else 0 for i in range(self.c.n))
            out = [(exps, 1, (g,))]
        elif gate.kind == CONST:
            out = [(self.zero, gate.value, (g,))]
        elif gate.kind == ADD:
            out = [
                (e, co, (g,) + rp)
                for c in gate.children
                for (e, co, rp) in self.plain(c)
            ]
        else:
            out = []
            child_lists = [self.plain(c) for c in gate.children]
            for combo in itertools.product(*child_lists):
                exps = self.zero
                coeff = 1
                for e, co, _ in combo:
                    exps = tuple(x + y for x, y in zip(exps, e))
                    coeff = coeff * co % p
                out.append((exps, coeff, (g,) + combo[-1][2]))
        self.plain_memo[g] = out
        return out

    def snipped(self, g: int) -> list:
        if g in self.snip_memo:
            return self.snip_memo[g]
        p = self.c.field.p
        if g == self.snip:
            out = [(self.zero, 1, (g,))]
        else:
            gate = self.c.gates[g]
            if gate.kind == ADD:
                out = [
                    (e, co, (g,) + rp)
                    for c in gate.children
                    for (e, co, rp) in self.snipped(c)
                ]
            elif gate.kind == MUL:
                out = []
                left_lists = [self.plain(c) for c in gate.children[:-1]]
                tail = self.snipped(gate.children[-1])
                for combo in itertools.product(*left_lists):
                    base = self.zero
                    coeff = 1
                    for e, co, _ in combo:
                        base = tuple(x + y for x, y in zip(base, e))
                        coeff = coeff * co % p
                    for e, co, rp in tail:
                        out.append(
                            (
                                tuple(x + y for x, y in zip(base, e)),
                                coeff * co % p,
                                (g,) + rp,
                            )
                        )
            else:
                out = []
        self.snip_memo[g] = out
        return out


def enumerate_proof_trees_with_paths(
    circuit: Circuit, root: int, snip: Optional[int] = None, cap: int = 1 << 16
) -> List[Tuple[tuple, int, tuple]]:
    """(exponents, coefficient, rightmost path) per tree.  The coefficient
    is kept even when it is zero mod p: the trees are syntactic objects."""
    count = count_proof_trees(circuit, root, snip)
    if count > cap:
        raise TooManyProofTrees(f"{count} proof-trees exceeds cap {cap}")
    enum = _TreeEnumerator(circuit, snip)
    return enum.plain(root) if snip is None else enum.snipped(root)


def enumerate_proof_trees(
    circuit: Circuit, root: int, snip: Optional[int] = None, cap: int = 1 << 16
) -> List[Tuple[tuple, int]]:
    """One monomial (exponent vector, coefficient) per (snipped) proof-tree."""
    return [
        (e, co) for (e, co, _) in enumerate_proof_trees_with_paths(circuit, root, snip, cap)
    ]


def proof_tree_sum(
    circuit: Circuit, root: int, snip: Optional[int] = None, cap: int = 1 << 16
) -> SparsePolynomial:
    """Sum of the values of all (snipped) proof-trees, as a polynomial."""
    terms = {}
    p = circuit.field.p
    for exps, coeff in enumerate_proof_trees(circuit, root, snip, cap):
        s = (terms.get(exps, 0) + coeff) % p
        if s:
            terms[exps] = s
        else:
            terms.pop(exps, None)
    return SparsePolynomial(circuit.n, circuit.field, terms)


# ---------------------------------------------------------------------------
# randomized equivalence
# ---------------------------------------------------------------------------

EQUIVALENT = "equivalent"
NOT_EQUIVALENT = "not_equivalent"


@dataclass
class EquivResult:
    verdict: str
    trials: int
    seed: int
    witness: Optional[list] = None
    values: Optional[tuple] = None

    @property
    def equivalent(self) -> bool:
        return self.verdict == EQUIVALENT

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "trials": self.trials,
            "seed": self.seed,
            "witness": self.witness,
            "values": list(self.values) if self.values else None,
        }


def _arity_of(obj):
    return obj.n, obj.field.p


def random_equiv(a, b, trials: int = 20, seed: int = 0) -> EquivResult:
    """Schwartz-Zippel identity test between two representations (circuits
    or layered circuits).  One-sided: NotEquivalent verdicts carry the
    witness point and both values; Equivalent means all trials agreed."""
    na, pa = _arity_of(a)
    nb, pb = _arity_of(b)
    if na != nb or pa != pb:
        raise IncompatibleArity(f"n/modulus mismatch: ({na},{pa}) vs ({nb},{pb})")
    points = backends.random_point_batch(seed, trials, na, pa)
    va = a.evaluate_batch(points)
    vb = b.evaluate_batch(points)
    for t in range(trials):
        x, y = int(va[t]), int(vb[t])
        if x != y:
            return EquivResult(
                NOT_EQUIVALENT,
                trials,
                seed,
                witness=[int(c) for c in points[t]],
                values=(x, y),
            )
    return EquivResult(EQUIVALENT, trials, seed)


# ---------------------------------------------------------------------------
# structural and bound reports
# ---------------------------------------------------------------------------


@dataclass
class StructuralReport:
    kind: str
    n: int
    modulus: int
    size: int
    gate_counts: dict
    depth: int
    product_depth: int
    max_fanin_add: int
    max_fanin_mul: int
    k: int
    var_output: int
    degree: Optional[int]
    degree_exact: bool
    degree_lower_bound: int
    top_fanin: Optional[int] = None

    def to_json_dict(self) -> dict:
        d = dict(self.__dict__)
        if d["top_fanin"] is not None:
            d["top_fanin"] = int(d["top_fanin"])
        return d


def _sampled_degree(circuit: Circuit, samples: int = 64, seed: int = 0) -> int:
    """Lower bound on the semantic degree from random proof-tree walks."""
    rng = random.Random(seed)
    best = 0
    for _ in range(samples):
        deg = 0
        stack = [circuit.output]
        while stack:
            g = stack.pop()
            gate = circuit.gates[g]
            if gate.kind == INPUT:
                deg += 1
            elif gate.kind == ADD:
                stack.append(rng.choice(gate.children))
            elif gate.kind == MUL:
                stack.extend(gate.children)
        best = max(best, deg)
    return best


def structural_report(obj, degree_budget: int = DEFAULT_BUDGET) -> StructuralReport:
    """Deterministic full scan of a circuit or a layered circuit."""
    if isinstance(obj, Circuit):
        return _circuit_report(obj, degree_budget)
    return obj.structural_report(degree_budget)


def _circuit_report(circuit: Circuit, degree_budget: int) -> StructuralReport:
    var = compute_var(circuit)
    counts = {INPUT: 0, CONST: 0, ADD: 0, MUL: 0}
    max_add = 0
    max_mul = 0
    depth = [0] * circuit.num_gates
    pblocks = [0] * circuit.num_gates
    for g, gate in enumerate(circuit.gates):
        counts[gate.kind] += 1
        if gate.kind == ADD:
            max_add = max(max_add, gate.fanin())
        elif gate.kind == MUL:
            max_mul = max(max_mul, gate.fanin())
        if gate.children:
            depth[g] = 1 + max(depth[c] for c in gate.children)
            if gate.kind == MUL:
                pblocks[g] = max(
                    pblocks[c] if circuit.gates[c].kind == MUL else pblocks[c] + 1
                    for c in gate.children
                )
            else:
                pblocks[g] = max(pblocks[c] for c in gate.children)
    degree = None
    exact = False
    lower = 0
    if expansion_bound(circuit, circuit.output) <= degree_budget:
        poly = brute_force_expand(circuit, degree_budget)
        degree = poly.total_degree()
        exact = True
        lower = degree
    else:
        lower = _sampled_degree(circuit)
    return StructuralReport(
        kind="circuit",
        n=circuit.n,
        modulus=circuit.field.p,
        size=circuit.size(),
        gate_counts=counts,
        depth=depth[circuit.output],
        product_depth=pblocks[circuit.output],
        max_fanin_add=max_add,
        max_fanin_mul=max_mul,
        k=var.max_coord,
        var_output=var.total(circuit.output),
        degree=degree,
        degree_exact=exact,
        degree_lower_bound=lower,
    )


@dataclass
class BoundReport:
    """Measured size/fan-in growth against the schedule's envelope.

    bound_ratio compares log2 of the output size to k*t + (kn/t)*log2(s);
    topfanin_ratio compares log_s of the top fan-in to kn/t.  Nothing is
    asserted here beyond finiteness: the constants hidden by the theory are
    reported, not assumed.
    """

    n: int
    k: int
    s: int
    t: int
    delta: int
    before_size: int
    after_size: int
    top_fanin: int
    bound_ratio: float
    topfanin_ratio: float

    def to_json_dict(self) -> dict:
        d = dict(self.__dict__)
        d["top_fanin"] = int(d["top_fanin"])
        return d


def check_bounds(before: StructuralReport, after: StructuralReport, schedule) -> BoundReport:
    n, k, s, t = schedule.n, schedule.k, schedule.s, schedule.t_value
    envelope = k * t + (k * n / t) * math.log2(max(s, 2))
    after_size = max(after.size, 1)
    bound_ratio = math.log2(after_size) / envelope if envelope > 0 else float("inf")
    top = after.top_fanin if after.top_fanin is not None else 1
    top = max(int(top), 1)
    denom = (k * n / t) * math.log2(max(s, 2))
    topfanin_ratio = math.log2(top) / denom if denom > 0 else float("inf")
    return BoundReport(
        n=n,
        k=k,
        s=s,
        t=t,
        delta=schedule.delta,
        before_size=before.size,
        after_size=after.size,
        top_fanin=top,
        bound_ratio=bound_ratio,
        topfanin_ratio=topfanin_ratio,
    )
