"""The oracle layer: brute-force expansion vs proof-tree enumeration,
randomized equivalence, structural reports and bound ratios."""

import random

import pytest

from circflat import (
    Schedule,
    brute_force_expand,
    check_bounds,
    count_proof_trees,
    enumerate_proof_trees,
    proof_tree_sum,
    random_equiv,
    structural_report,
)
from circflat.circuit import Circuit, Gate, add_gate, const_gate, input_gate, mul_gate
from circflat.errors import ExpansionTooLarge, IncompatibleArity, TooManyProofTrees
from circflat.expand import expansion_bound
from circflat.field import FieldSpec
from circflat.generators import full_multilinear, random_multilinear

from conftest import build, pos22


def test_expand_single_variable():
    c = build(1, [input_gate(1)])
    assert brute_force_expand(c).terms == {(1,): 1}


def test_expand_pos22():
    poly = brute_force_expand(pos22())
    assert poly.num_terms() == 4
    assert all(v == 1 for v in poly.terms.values())
    assert set(poly.terms) == {
        (1, 0, 1, 0),
        (1, 0, 0, 1),
        (0, 1, 1, 0),
        (0, 1, 0, 1),
    }


def test_expand_budget():
    c = full_multilinear(8)
    assert expansion_bound(c, c.output) == 2**8
    with pytest.raises(ExpansionTooLarge):
        brute_force_expand(c, budget=100)
    assert brute_force_expand(c, budget=256).num_terms() == 256


def test_expand_matches_proof_trees(field):
    for seed in (0, 2):
        c = random_multilinear(24, 5, seed=seed, field=field)
        assert brute_force_expand(c) == proof_tree_sum(c, c.output, cap=1 << 14)


# -- proof-tree enumeration ---------------------------------------------------


def test_trees_of_product():
    c = build(2, [input_gate(1), input_gate(2), mul_gate((0, 1))])
    assert enumerate_proof_trees(c, 2) == [((1, 1), 1)]


def test_trees_of_sum():
    c = build(2, [input_gate(1), input_gate(2), add_gate((0, 1))])
    assert enumerate_proof_trees(c, 2) == [((1, 0), 1), ((0, 1), 1)]


def test_snipped_tree_replaces_right_add():
    # mul(add(x1,x2), add(x3,x4)) snipped at the right add:[x1, x2]
    c = pos22()
    got = enumerate_proof_trees(c, c.output, snip=5)
    assert got == [((1, 0, 0, 0), 1), ((0, 1, 0, 0), 1)]


def test_tree_counting_and_cap():
    c = full_multilinear(6)
    assert count_proof_trees(c, c.output) == 2**6
    with pytest.raises(TooManyProofTrees):
        enumerate_proof_trees(c, c.output, cap=10)


def test_zero_coefficient_trees_are_kept():
    c = build(1, [input_gate(1), const_gate(0), mul_gate((0, 1))])
    trees = enumerate_proof_trees(c, 2)
    assert trees == [((1,), 0)]


# -- randomized equivalence -----------------------------------------------------


def test_random_equiv_reflexive(field):
    c = random_multilinear(30, 6, seed=1, field=field)
    assert random_equiv(c, c, 20, 0).equivalent


def test_random_equiv_detects_const_mutation(field):
    c = random_multilinear(40, 8, seed=3, field=field)
    gid = next(i for i, g in enumerate(c.gates) if g.kind == "const")
    gates = list(c.gates)
    gates[gid] = Gate("const", value=(gates[gid].value + 1) % field.p)
    mutated = Circuit(c.n, gates, c.output, field=field)
    res = random_equiv(c, mutated, 20, 0)
    assert res.verdict == "not_equivalent"
    assert res.witness is not None and len(res.witness) == c.n
    a, b = res.values
    assert c.evaluate(res.witness) == a
    assert mutated.evaluate(res.witness) == b


def test_random_equiv_symmetry(field):
    a = random_multilinear(30, 6, seed=5, field=field)
    b = random_multilinear(30, 6, seed=6, field=field)
    assert (
        random_equiv(a, b, 10, 1).verdict == random_equiv(b, a, 10, 1).verdict
    )


def test_random_equiv_arity_errors(field):
    a = build(1, [input_gate(1)], field=field)
    b = build(2, [input_gate(1)], field=field)
    with pytest.raises(IncompatibleArity):
        random_equiv(a, b, 5, 0)
    c = build(1, [input_gate(1)], field=FieldSpec(101))
    with pytest.raises(IncompatibleArity):
        random_equiv(a, c, 5, 0)


def test_evaluation_consistency(field):
    """Evaluating the exact expansion agrees with direct circuit evaluation
    at random points."""
    rng = random.Random(0)
    for seed in (0, 4):
        c = random_multilinear(30, 6, seed=seed, field=field)
        poly = brute_force_expand(c)
        for _ in range(100):
            pt = [rng.randrange(field.p) for _ in range(c.n)]
            assert poly.evaluate(pt) == c.evaluate(pt)


def test_sparsity_bound(field):
    from circflat.analysis import compute_var

    for seed in (1, 3):
        c = random_multilinear(40, 8, seed=seed, field=field)
        poly = brute_force_expand(c)
        bound = 1
        for d in compute_var(c).vector(c.output):
            bound *= 1 + d
        assert poly.num_terms() <= bound


# -- structural reports -----------------------------------------------------------


def test_report_product():
    c = build(2, [input_gate(1), input_gate(2), mul_gate((0, 1))])
    rep = structural_report(c)
    assert rep.size == 2 and rep.depth == 1 and rep.product_depth == 1
    assert rep.k == 1 and rep.var_output == 2
    assert rep.degree == 2 and rep.degree_exact


def test_report_nested_muls_merge_product_blocks():
    c = build(
        3,
        [input_gate(1), input_gate(2), input_gate(3), mul_gate((0, 1)), mul_gate((3, 2))],
    )
    assert structural_report(c).product_depth == 1


def test_report_layered_product_depth(field):
    from circflat.depth_reduce import reduce_depth_delta

    lay, _ = reduce_depth_delta(pos22(field), 2)
    rep = structural_report(lay)
    assert rep.kind == "layered"
    assert rep.product_depth == 2
    assert rep.top_fanin >= 1


def test_report_records_balanced_structure(field):
    from circflat.balance import balance
    from circflat.normalize import normalized

    bal, _ = balance(normalized(random_multilinear(40, 8, seed=2, field=field)))
    rep = structural_report(bal)
    assert rep.max_fanin_mul <= 5


def test_check_bounds_delta3_row(field):
    from circflat.depth_reduce import choose_t, reduce_depth_delta

    orig = random_multilinear(60, 10, seed=8, field=field)
    layered, rep = reduce_depth_delta(orig, 3)
    before = structural_report(orig)
    after = structural_report(layered)
    sched = choose_t(rep.n, rep.k, rep.s, 3)
    bounds = check_bounds(before, after, sched)
    assert 0 <= bounds.topfanin_ratio < float("inf")
    assert 0 < bounds.bound_ratio < float("inf")


def test_check_bounds_trivial():
    c = build(1, [input_gate(1)])
    rep = structural_report(c)
    sched = Schedule(n=1, k=1, s=2, delta=2, t_value=1)
    bounds = check_bounds(rep, rep, sched)
    assert bounds.topfanin_ratio == 0.0
    assert bounds.bound_ratio < float("inf")
    d = bounds.to_json_dict()
    assert d["t"] == 1 and d["top_fanin"] == 1
