import pytest

from circflat import brute_force_expand, check_multi_k_ic, validate
from circflat.errors import InvalidSpec
from circflat.generators import (
    GeneratorSpec,
    full_multilinear,
    generate,
    product_of_sums,
    product_of_sums_power,
    random_multi_k_ic,
    random_multilinear,
)

from conftest import corpus_plan


def test_product_of_sums_shape():
    c = product_of_sums(4, 2)
    assert c.n == 8
    assert validate(c) == []
    poly = brute_force_expand(c)
    # one variable from each block: 2^4 monomials, all coefficient 1
    assert poly.num_terms() == 16
    assert all(v == 1 for v in poly.terms.values())
    for exps in poly.terms:
        for b in range(4):
            assert sum(exps[2 * b : 2 * b + 2]) == 1


def test_product_of_sums_power_is_multi_k():
    v = product_of_sums_power(4, 2, 2)
    assert check_multi_k_ic(v, 2)[0]
    assert not check_multi_k_ic(v, 1)[0]
    base = brute_force_expand(product_of_sums(4, 2))
    assert brute_force_expand(v) == base.mul(base)


def test_full_multilinear():
    c = full_multilinear(5)
    poly = brute_force_expand(c)
    assert poly.num_terms() == 32
    assert all(v == 1 for v in poly.terms.values())


def test_random_multilinear_invariants(field):
    for seed, n, g in corpus_plan()[:10]:
        c = random_multilinear(g, n, seed=seed, field=field)
        assert validate(c) == []
        assert c.num_gates <= g
        assert check_multi_k_ic(c, 1)[0]
        # the reduction phase makes the output cover every variable
        from circflat.analysis import compute_var

        assert compute_var(c).total(c.output) == n


def test_random_multilinear_deterministic(field):
    a = random_multilinear(60, 8, seed=42, field=field)
    b = random_multilinear(60, 8, seed=42, field=field)
    assert a.serialize() == b.serialize()
    c = random_multilinear(60, 8, seed=43, field=field)
    assert a.serialize() != c.serialize()


@pytest.mark.parametrize("k", [2, 3])
def test_random_multi_k_ic(field, k):
    c = random_multi_k_ic(60, k, 8, seed=3, field=field)
    assert check_multi_k_ic(c, k)[0]
    assert validate(c) == []


def test_generate_dispatch(field):
    c = generate(GeneratorSpec("product_of_sums", blocks=2, block_size=3), field=field)
    assert c.n == 6
    c = generate(GeneratorSpec("random_multilinear", n=6, gates=40, seed=1), field=field)
    assert check_multi_k_ic(c, 1)[0]
    with pytest.raises(InvalidSpec):
        generate(GeneratorSpec("no_such_family"))
    with pytest.raises(InvalidSpec):
        generate(GeneratorSpec("random_multilinear", n=6))  # missing gates
    with pytest.raises(InvalidSpec):
        generate(GeneratorSpec("product_of_sums", blocks=0, block_size=2))
