"""Seeded circuit families for the corpus, tests and benchmarks.

The random families track per-gate Var vectors during generation and only
multiply gates whose combined per-variable degree stays within k, so the
multi-k-ic invariant (multilinearity at k = 1) holds by construction.
Sum gates are unrestricted.  Everything is deterministic in (spec, seed).
"""

import random
from dataclasses import dataclass
from typing import Optional

from .circuit import Circuit, add_gate, const_gate, input_gate, mul_gate
from .errors import InvalidSpec
from .field import FieldSpec


@dataclass
class GeneratorSpec:
    family: str
    n: Optional[int] = None
    seed: int = 0
    gates: Optional[int] = None
    k: Optional[int] = None
    blocks: Optional[int] = None
    block_size: Optional[int] = None


def product_of_sums(blocks: int, block_size: int, field: Optional[FieldSpec] = None) -> Circuit:
    """prod_{i=1..b} (x_{(i-1)w+1} + ... + x_{iw}), n = b * w."""
    if blocks < 1 or block_size < 1:
        raise InvalidSpec("product_of_sums needs blocks >= 1 and block_size >= 1")
    field = field or FieldSpec()
    n = blocks * block_size
    gates = [input_gate(i + 1) for i in range(n)]
    sums = []
    for b in range(blocks):
        kids = tuple(range(b * block_size, (b + 1) * block_size))
        if block_size == 1:
            sums.append(kids[0])
        else:
            gates.append(add_gate(kids))
            sums.append(len(gates) - 1)
    if blocks == 1:
        out = sums[0]
    else:
        gates.append(mul_gate(sums))
        out = len(gates) - 1
    return Circuit(n, gates, out, field=field, name=f"pos{blocks}x{block_size}")


def product_of_sums_power(
    blocks: int, block_size: int, k: int, field: Optional[FieldSpec] = None
) -> Circuit:
    """prod_i (block_i)^k: the multi-k-ic variant of product_of_sums."""
    if k < 1:
        raise InvalidSpec("k must be >= 1")
    field = field or FieldSpec()
    base = product_of_sums(blocks, block_size, field)
    if k == 1:
        return base
    gates = list(base.gates)
    root = gates[base.output]
    if root.kind != "mul":
        kids = (base.output,) * k
    else:
        kids = tuple(c for c in root.children for _ in range(k))
        gates = gates[: base.output]
    gates.append(mul_gate(kids))
    return Circuit(
        base.n, gates, len(gates) - 1, field=field, name=f"pos{blocks}x{block_size}p{k}"
    )


def full_multilinear(n: int, field: Optional[FieldSpec] = None) -> Circuit:
    """prod_i (1 + x_i): all 2^n multilinear monomials with coefficient 1."""
    if n < 1:
        raise InvalidSpec("full_multilinear needs n >= 1")
    field = field or FieldSpec()
    gates = [input_gate(i + 1) for i in range(n)]
    gates.append(const_gate(1))
    one = n
    sums = []
    for i in range(n):
        gates.append(add_gate((one, i)))
        sums.append(len(gates) - 1)
    if n == 1:
        out = sums[0]
    else:
        gates.append(mul_gate(tuple(sums)))
        out = len(gates) - 1
    return Circuit(n, gates, out, field=field, name=f"full{n}")


def random_multi_k_ic(
    num_gates: int,
    k: int,
    n: int,
    seed: int = 0,
    field: Optional[FieldSpec] = None,
) -> Circuit:
    """Random circuit with every Var coordinate <= k by construction.

    Two phases over a pool initialized with the inputs and a few random
    constants.  First a batch of free "tap" gates combines random pool
    members (products only where the merged Var vector stays under k),
    growing the pool and creating shared subcircuits.  Then a reduction
    phase repeatedly consumes two pool members into a fresh gate until one
    root remains, so every gate is live and the output touches all n
    variables.  A final tail adds a constant multiple of one variable,
    keeping at least one constant on an additive live path.

    The total gate count lands within two of ``num_gates``.
    """
    if n < 1 or k < 1:
        raise InvalidSpec("need n >= 1 and k >= 1")
    field = field or FieldSpec()
    num_consts = max(1, n // 4)
    min_gates = 2 * (n + num_consts) + 1
    if num_gates < min_gates:
        raise InvalidSpec(f"need at least {min_gates} gates for n={n}")
    rng = random.Random(seed)
    gates = [input_gate(i + 1) for i in range(n)]
    vecs = [tuple(1 if j == i else 0 for j in range(n)) for i in range(n)]
    for _ in range(num_consts):
        # nonzero constants away from 1 where the field is big enough
        if field.p > 3:
            value = rng.randrange(2, field.p - 1)
        else:
            value = rng.randrange(1, field.p)
        gates.append(const_gate(value))
        vecs.append((0,) * n)

    def combine(a: int, b: int) -> None:
        merged = tuple(x + y for x, y in zip(vecs[a], vecs[b]))
        if max(merged) <= k and rng.random() < 0.6:
            gates.append(mul_gate((a, b)))
            vecs.append(merged)
        else:
            gates.append(add_gate((a, b)))
            vecs.append(tuple(max(x, y) for x, y in zip(vecs[a], vecs[b])))

    taps = max(0, (num_gates - 1) // 2 - (n + num_consts) - 1)
    for _ in range(taps):
        combine(rng.randrange(len(gates)), rng.randrange(len(gates)))
    pool = list(range(len(gates)))
    while len(pool) > 1:
        a = pool.pop(rng.randrange(len(pool)))
        b = pool.pop(rng.randrange(len(pool)))
        combine(a, b)
        pool.append(len(gates) - 1)
    cvar = rng.randrange(n)
    gates.append(mul_gate((n, cvar)))
    gates.append(add_gate((len(gates) - 2, len(gates) - 1)))
    kind = "ml" if k == 1 else f"m{k}ic"
    return Circuit(
        n, gates, len(gates) - 1, field=field, name=f"rnd_{kind}_n{n}_g{num_gates}_s{seed}"
    )


def random_multilinear(
    num_gates: int, n: int, seed: int = 0, field: Optional[FieldSpec] = None
) -> Circuit:
    """Random syntactically multilinear circuit (multi-1-ic)."""
    return random_multi_k_ic(num_gates, 1, n, seed=seed, field=field)


def generate(spec: GeneratorSpec, field: Optional[FieldSpec] = None) -> Circuit:
    field = field or FieldSpec()
    fam = spec.family
    if fam == "product_of_sums":
        if spec.blocks is None or spec.block_size is None:
            raise InvalidSpec("product_of_sums needs blocks and block_size")
        if spec.k and spec.k > 1:
            return product_of_sums_power(spec.blocks, spec.block_size, spec.k, field)
        return product_of_sums(spec.blocks, spec.block_size, field)
    if fam == "full_multilinear":
        if spec.n is None:
            raise InvalidSpec("full_multilinear needs n")
        return full_multilinear(spec.n, field)
    if fam == "random_multilinear":
        if spec.gates is None or spec.n is None:
            raise InvalidSpec("random_multilinear needs gates and n")
        return random_multilinear(spec.gates, spec.n, seed=spec.seed, field=field)
    if fam == "random_multi_k_ic":
        if spec.gates is None or spec.n is None or spec.k is None:
            raise InvalidSpec("random_multi_k_ic needs gates, k and n")
        return random_multi_k_ic(spec.gates, spec.k, spec.n, seed=spec.seed, field=field)
    raise InvalidSpec(f"unknown family {fam!r}")
