import pytest

from circflat import check_multi_k_ic, compute_var, random_equiv
from circflat.circuit import Gate, add_gate, input_gate, mul_gate
from circflat.generators import random_multi_k_ic, random_multilinear
from circflat.normalize import make_right_heavy, normalize_fanin2, normalized

from conftest import build, pos22


def test_fanin2_left_associative_split():
    c = build(3, [input_gate(1), input_gate(2), input_gate(3), add_gate((0, 1, 2))])
    out = normalize_fanin2(c)
    # add(a, b, c) -> add(add(a, b), c)
    assert out.gates[3] == Gate("add", children=(0, 1))
    assert out.gates[4] == Gate("add", children=(3, 2))
    assert out.output == 4


def test_fanin2_idempotent_on_binary():
    c = pos22()
    out = normalize_fanin2(c)
    assert out.structurally_equal(c)


def test_fanin2_contracts_unary():
    c = build(1, [input_gate(1), Gate("add", children=(0,)), Gate("mul", children=(1,))])
    out = normalize_fanin2(c)
    assert out.num_gates == 1
    assert out.output == 0


def test_fanin2_equivalent_on_wide_mul(field):
    c = build(
        4,
        [input_gate(1), input_gate(2), input_gate(3), input_gate(4), mul_gate((0, 1, 2, 3))],
        field=field,
    )
    out = normalize_fanin2(c)
    assert all(g.fanin() == 2 for g in out.gates if g.children)
    assert random_equiv(c, out, trials=20, seed=0).equivalent


def test_fanin2_size_growth_bounded():
    c = build(
        6,
        [input_gate(i + 1) for i in range(6)] + [add_gate(tuple(range(6)))],
    )
    out = normalize_fanin2(c)
    assert out.size() <= 2 * c.size()


def test_right_heavy_swaps():
    # mul(A, B) with |Var(A)| = 3 > |Var(B)| = 1 swaps to mul(B, A)
    gates = [
        input_gate(1),
        input_gate(2),
        input_gate(3),
        input_gate(4),
        mul_gate((0, 1)),
        mul_gate((2, 4)),  # A = x3 * (x1*x2), already right-heavy
        mul_gate((5, 3)),  # left |Var| = 3 > right |Var| = 1: swap
    ]
    c = build(4, gates)
    out = make_right_heavy(c)
    assert out.gates[6].children == (3, 5)
    # ids and everything else untouched
    assert out.gates[:6] == c.gates[:6]


def test_right_heavy_tie_keeps_order():
    c = pos22()
    out = make_right_heavy(c)
    assert out.structurally_equal(c)


def test_right_heavy_property_and_equiv(field):
    c = random_multilinear(40, 8, seed=11, field=field)
    out = normalized(c)
    var = compute_var(out)
    for g in out.gates:
        if g.kind == "mul":
            left, right = g.children
            assert var.total(left) <= var.total(right)
    assert random_equiv(c, out, trials=20, seed=1).equivalent


@pytest.mark.parametrize("k", [1, 2, 3])
def test_normalization_preserves_multi_k_ic(field, k):
    for seed in (0, 1):
        c = random_multi_k_ic(40, k, 6, seed=seed, field=field)
        out = normalized(c)
        for kk in (1, 2, 3):
            assert check_multi_k_ic(c, kk)[0] == check_multi_k_ic(out, kk)[0]
