"""Balancing: rewrite a normalized circuit so products are shallow.

The output circuit computes the same polynomial but every product gate has
fan-in at most 5 and carries factors of at most half the potential of the
sum it feeds.  The construction materializes one output node per demanded
quantity: [u], the polynomial of a source gate, and [u:v], a gate quotient.
A node of potential t (its |Var|, or quotient |Var|) is built from the
frontier decomposition at threshold m ~ t/2:

    [u]   = sum (w,z) x-edges  [u:w] * [wL] * [z]
          + sum (w,z) +-edges  [u:w] * [z]

    [u:v] = sum (w,z) x-edges  [u:w] * [wL] * [z:v]
          + sum (w,z) +-edges  [u:w] * [z:v]

All factors on the right have potential at most t/2 except possibly [wL]
in the quotient identity, whose own frontier expansion is spliced inline
when it is too heavy, giving products of up to five factors

    [u:w] * [wL:p] * [pL] * [q] * [z:v].

Keys of potential <= 1 bottom out: they depend on at most one variable, so
the polynomial is recovered exactly by interpolation at k + 1 points and
materialized directly.  Only keys actually demanded by the output's
recursion are built, and each key is built once.

Two threshold details matter.  The plain identity is used with
m = max(2, ceil(t/2)): at m = 1 a proof-tree whose rightmost path ends in
a variable leaf never drops below the threshold and the decomposition
would miss it.  The quotient identity has no such hole (the snipped leaf
sits at quotient potential 0) and uses m = ceil(t/2) as is.
"""

import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from . import backends
from .analysis import compute_var, inferred_k, live_variable
from .circuit import ADD, CONST, INPUT, MUL, Circuit, Gate, require_valid
from .errors import FieldTooSmall, InvalidCircuit
from .field import lagrange_interpolate
from .quotient import (
    _python_eval_table,
    _python_quotient_values,
    decomposition_terms,
    quotient_table,
    quotient_values_batch,
)

NodeKey = Tuple


@dataclass
class BalanceReport:
    input_size: int
    output_size: int
    max_mul_fanin: int
    max_add_fanin: int
    halving_ok: bool
    k_preserved: bool
    base_case_count: int

    def to_json_dict(self) -> dict:
        return dict(self.__dict__)


def check_balanced(circuit: Circuit) -> BalanceReport:
    """Structural scan for the balanced-shape properties.

    halving_ok certifies the halving the depth reduction relies on: read
    every sum gate of potential >= 2 as a sum of products (a product child
    contributes its own children as factors, any other child is a
    single-factor summand) and require each factor's |Var| within half the
    sum's |Var|.  Products reached outside a sum (no sum parent, or nested
    inside another product) are additionally checked against their own
    |Var|, except scalar scalings (at most one variable-carrying child),
    which have no mass to split.
    """
    require_valid(circuit)
    var = compute_var(circuit)
    add_parents: Dict[int, list] = {}
    mul_parents: Dict[int, list] = {}
    max_add = 0
    max_mul = 0
    for g, gate in enumerate(circuit.gates):
        if gate.kind == ADD:
            max_add = max(max_add, gate.fanin())
            for c in gate.children:
                add_parents.setdefault(c, []).append(g)
        elif gate.kind == MUL:
            max_mul = max(max_mul, gate.fanin())
            for c in gate.children:
                mul_parents.setdefault(c, []).append(g)
    halving = True
    for g, gate in enumerate(circuit.gates):
        if gate.kind == ADD:
            total = var.total(g)
            if total < 2:
                continue
            for c in gate.children:
                factors = (
                    circuit.gates[c].children if circuit.gates[c].kind == MUL else (c,)
                )
                for h in factors:
                    if 2 * var.total(h) > total:
                        halving = False
        elif gate.kind == MUL:
            if not mul_parents.get(g) and add_parents.get(g):
                continue  # covered by the sum(s) it feeds
            carrying = sum(1 for c in gate.children if var.total(c) > 0)
            if carrying < 2:
                continue
            total = var.total(g)
            for c in gate.children:
                if 2 * var.total(c) > total:
                    halving = False
    size = circuit.size()
    return BalanceReport(
        input_size=size,
        output_size=size,
        max_mul_fanin=max_mul,
        max_add_fanin=max_add,
        halving_ok=halving,
        k_preserved=True,
        base_case_count=0,
    )


class _Builder:
    """Output-circuit construction state: gates built so far plus caches
    for constants, inputs and variable powers."""

    def __init__(self, n: int, field):
        self.n = n
        self.field = field
        self.gates = []
        self.consts: Dict[int, int] = {}
        self.inputs: Dict[int, int] = {}

    def emit(self, gate: Gate) -> int:
        self.gates.append(gate)
        return len(self.gates) - 1

    def const(self, value: int) -> int:
        value %= self.field.p
        if value not in self.consts:
            self.consts[value] = self.emit(Gate(CONST, value=value))
        return self.consts[value]

    def input(self, var_1based: int) -> int:
        if var_1based not in self.inputs:
            self.inputs[var_1based] = self.emit(Gate(INPUT, var=var_1based))
        return self.inputs[var_1based]

    def power(self, var_1based: int, j: int) -> int:
        """x^j with product fan-in <= 5 and no factor above half the total
        degree: flat up to j = 5, then near-equal splits."""
        if j == 1:
            return self.input(var_1based)
        if j <= 5:
            x = self.input(var_1based)
            return self.emit(Gate(MUL, children=(x,) * j))
        half = j // 2
        if j % 2 == 0:
            a = self.power(var_1based, half)
            return self.emit(Gate(MUL, children=(a, a)))
        a = self.power(var_1based, half)
        return self.emit(Gate(MUL, children=(a, a, self.input(var_1based))))

    def product(self, factor_ids) -> int:
        if len(factor_ids) == 1:
            return factor_ids[0]
        return self.emit(Gate(MUL, children=tuple(factor_ids)))

    def summation(self, summand_ids) -> int:
        if len(summand_ids) == 1:
            return summand_ids[0]
        return self.emit(Gate(ADD, children=tuple(summand_ids)))


class _Balancer:
    def __init__(self, circuit: Circuit):
        require_valid(circuit)
        if any(g.fanin() > 2 for g in circuit.gates):
            raise InvalidCircuit("balance requires fan-in <= 2 (run normalize first)")
        self.c = circuit
        self.var = compute_var(circuit)
        for g, gate in enumerate(circuit.gates):
            if gate.kind == MUL and gate.fanin() == 2:
                left, right = gate.children
                if self.var.total(left) > self.var.total(right):
                    raise InvalidCircuit(
                        f"gate {g} is not right-heavy (run make_right_heavy first)"
                    )
        self.k = max(inferred_k(circuit), 1)
        if circuit.field.p <= self.k:
            raise FieldTooSmall(
                f"interpolation needs {self.k + 1} distinct points, p = {circuit.field.p}"
            )
        self.out = _Builder(circuit.n, circuit.field)
        self.memo: Dict[NodeKey, int] = {}
        self.base_case_count = 0
        self._fast = backends.fast_prime_kind(circuit.field.p) is not None

    # -- potentials ------------------------------------------------------

    def potential_vector(self, key: NodeKey):
        if key[0] == "plain":
            return self.var.vector(key[1])
        qt = quotient_table(self.c, key[2])
        return qt.vector(key[1])

    # -- base-case evaluation ---------------------------------------------

    def _eval_key(self, key: NodeKey, points: np.ndarray):
        """Values of the key's polynomial at each point row."""
        if self._fast:
            vals = self.c.eval_table(points)
            if key[0] == "plain":
                return [int(x) for x in vals[key[1]]]
            q = quotient_values_batch(self.c, key[2], vals)
            return [int(x) for x in q[key[1]]]
        out = []
        for row in points:
            point = [int(x) for x in row]
            vals = _python_eval_table(self.c, point)
            if key[0] == "plain":
                out.append(vals[key[1]])
            else:
                out.append(_python_quotient_values(self.c, key[2], vals)[key[1]])
        return out

    def base_node(self, key: NodeKey) -> int:
        vec = self.potential_vector(key)
        self.base_case_count += 1
        n = self.c.n
        if sum(vec) == 0:
            pts = np.zeros((1, n), dtype=np.uint64)
            value = self._eval_key(key, pts)[0]
            return self.out.const(value)
        i = live_variable(vec)
        xs = list(range(self.k + 1))
        pts = np.zeros((self.k + 1, n), dtype=np.uint64)
        pts[:, i] = np.asarray(xs, dtype=np.uint64)
        ys = self._eval_key(key, pts)
        coeffs = lagrange_interpolate(xs, ys, self.c.field)
        terms = []
        for j, cj in enumerate(coeffs):
            if cj == 0:
                continue
            if j == 0:
                terms.append(self.out.const(cj))
            else:
                pw = self.out.power(i + 1, j)
                if cj == 1:
                    terms.append(pw)
                else:
                    terms.append(self.out.emit(Gate(MUL, children=(self.out.const(cj), pw))))
        if not terms:
            return self.out.const(0)
        return self.out.summation(terms)

    # -- decomposition ------------------------------------------------------

    def _wl_parts(self, w_left: int, t: int):
        """Factor lists standing in for [wL] inside a quotient-node product.

        Light left children are referenced directly; heavy ones are spliced
        as their own frontier expansion so every factor stays within t/2.
        """
        L = self.var.total(w_left)
        if L <= t // 2:
            return [[("plain", w_left)]]
        m_w = max(2, math.ceil(L / 2))
        parts = []
        for term in decomposition_terms(self.c, w_left, m_w, None):
            prefix = [] if term.w == w_left else [("quot", w_left, term.w)]
            if term.is_mul:
                p_left = self.c.gates[term.w].children[0]
                parts.append(prefix + [("plain", p_left), ("plain", term.z)])
            else:
                parts.append(prefix + [("plain", term.z)])
        return parts

    def node(self, key: NodeKey) -> int:
        if key in self.memo:
            return self.memo[key]
        t = sum(self.potential_vector(key))
        if t <= 1:
            gid = self.base_node(key)
            self.memo[key] = gid
            return gid

        if key[0] == "plain":
            u, v = key[1], None
            m = max(2, math.ceil(t / 2))
        else:
            u, v = key[1], key[2]
            m = math.ceil(t / 2)
        terms = decomposition_terms(self.c, u, m, target=v)
        assert terms, f"empty decomposition for {key} at m={m}"

        factor_lists = []
        for term in terms:
            prefix = [] if term.w == u else [("quot", u, term.w)]
            if v is None:
                tail = [("plain", term.z)]
            else:
                tail = [] if term.z == v else [("quot", term.z, v)]
            if term.is_mul:
                gate_w = self.c.gates[term.w]
                w_left = gate_w.children[0] if gate_w.fanin() == 2 else None
                if w_left is None:
                    factor_lists.append(prefix + tail)
                else:
                    for part in self._wl_parts(w_left, t):
                        factor_lists.append(prefix + part + tail)
            else:
                factor_lists.append(prefix + tail)

        summands = []
        for factors in factor_lists:
            assert len(factors) <= 5
            if not factors:
                # the rightmost path jumps straight from u to the snipped
                # target: the summand is the constant 1
                summands.append(self.out.const(1))
                continue
            for f in factors:
                assert 2 * sum(self.potential_vector(f)) <= t, (key, f)
            ids = [self.node(f) for f in factors]
            summands.append(self.out.product(ids))
        gid = self.out.summation(summands)
        self.memo[key] = gid
        return gid

    def build(self) -> Circuit:
        root_key = ("plain", self.c.output)
        root = self.node(root_key)
        return Circuit(
            self.c.n,
            self.out.gates,
            root,
            field=self.c.field,
            name=self.c.name + "_bal",
        )


def balance(circuit: Circuit) -> Tuple[Circuit, BalanceReport]:
    """Balanced equivalent of a validated, binary, right-heavy circuit,
    plus the structural report of the result."""
    builder = _Balancer(circuit)
    out = builder.build()
    scan = check_balanced(out)
    k_in = inferred_k(circuit)
    ok, _ = _multi_k_verdict(out, k_in)
    return out, BalanceReport(
        input_size=circuit.size(),
        output_size=out.size(),
        max_mul_fanin=scan.max_mul_fanin,
        max_add_fanin=scan.max_add_fanin,
        halving_ok=scan.halving_ok,
        k_preserved=ok,
        base_case_count=builder.base_case_count,
    )


def _multi_k_verdict(circuit: Circuit, k: int):
    from .analysis import check_multi_k_ic

    return check_multi_k_ic(circuit, max(k, 1))
