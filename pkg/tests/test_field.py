import pytest

from circflat.errors import InvalidParams
from circflat.field import MERSENNE61, FieldSpec, is_prime, lagrange_interpolate


def test_known_primes():
    for p in (2, 3, 5, 101, 10007, MERSENNE61):
        assert is_prime(p)


def test_known_composites():
    for c in (1, 0, 4, 561, 1 << 61, MERSENNE61 - 2):
        assert not is_prime(c)


def test_fieldspec_rejects_composite():
    with pytest.raises(InvalidParams):
        FieldSpec(15)
    with pytest.raises(InvalidParams):
        FieldSpec(1)


def test_field_ops():
    f = FieldSpec(10007)
    assert f.add(10000, 10) == 3
    assert f.mul(10006, 10006) == 1
    assert f.mul(1234, f.inv(1234)) == 1
    assert f.neg(1) == 10006
    assert f.reduce(-1) == 10006


def test_lagrange_recovers_polynomial():
    f = FieldSpec(MERSENNE61)
    # p(x) = 7 + 3x + 5x^3
    def p(x):
        return (7 + 3 * x + 5 * x**3) % f.p

    xs = [0, 1, 2, 3]
    coeffs = lagrange_interpolate(xs, [p(x) for x in xs], f)
    assert coeffs == [7, 3, 0, 5]


def test_lagrange_degenerate_constant():
    f = FieldSpec(101)
    coeffs = lagrange_interpolate([0, 1], [42, 42], f)
    assert coeffs == [42, 0]
