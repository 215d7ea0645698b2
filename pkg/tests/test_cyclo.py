from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from weildescent.cyclo import GaloisElement, fixing_group, in_subfield, legendre, tower
from weildescent.errors import NotInGroup


def test_roots_and_embedding():
    tw = tower(3, 1)
    z3 = tw.root(4)
    assert z3 == tw.zeta(3)
    assert z3 * z3 * z3 == tw.one
    assert tw.root(3) * tw.root(3) == -tw.one
    assert z3.lift(2) == tower(3, 2).root(12)


def test_small_identities():
    tw = tower(3, 1)
    assert tw.zeta(3) + tw.zeta(3, 2) == -tw.one
    assert tw.i * tw.i == -tw.one
    tw5 = tower(5, 1)
    x = tw5.one + tw5.zeta(5)
    assert x * x.inverse() == tw5.one


def test_galois_action_on_roots():
    tw = tower(3, 1)
    assert GaloisElement(3, 1, 5)(tw.zeta(3)) == tw.zeta(3, 2)
    assert GaloisElement(5, 1, 13)(tower(5, 1).i) == tower(5, 1).i
    assert GaloisElement(5, 1, 3)(tower(5, 1).i) == -tower(5, 1).i


@pytest.mark.parametrize("s", [3, 7, 9, 11, 13])
def test_gauss_sum_sign_rule(s):
    # sigma_s multiplies the Gauss sum by the Legendre symbol (s|p), computed independently
    tw = tower(5, 1)
    g = sum((tw.zeta(5, a) * legendre(a, 5) for a in range(1, 5)), tw.zero)
    assert GaloisElement(5, 1, s)(g) == g * legendre(s % 5, 5)


def test_gauss_squares():
    tw5, tw3 = tower(5, 1), tower(3, 1)
    g5 = tw5.zeta(5) - tw5.zeta(5, 2) - tw5.zeta(5, 3) + tw5.zeta(5, 4)
    assert g5 == tw5.gauss and g5 * g5 == tw5.scalar(5)
    g3 = tw3.zeta(3) - tw3.zeta(3, 2)
    assert g3 * g3 == tw3.scalar(-3)
    assert tower(7, 2).sqrt_p ** 2 == tower(7, 2).scalar(7)


def test_subfield_membership():
    tw = tower(5, 2)
    assert in_subfield(tw.scalar(5), "K")
    x = tw.sqrt_p + tw.sqrt_mp
    assert in_subfield(x, "K") and not in_subfield(x, "Q(sqrt p)")
    assert not in_subfield(tw.zeta(5), "K")


def test_fixing_group_size():
    # K has degree 4 over Q, so its fixing group has index 4
    tw = tower(5, 2)
    assert 4 * len(fixing_group(5, 2, "K")) == tw.degree


units = st.integers(min_value=1, max_value=4 * 25 - 1).filter(lambda s: s % 2 and s % 5)
coeffs = st.lists(st.integers(-5, 5), min_size=1, max_size=40)


@given(coeffs, coeffs, units)
def test_galois_is_a_ring_map(a, b, s):
    tw = tower(5, 2)
    x = tw.from_exponents(dict(enumerate(a)))
    y = tw.from_exponents(dict(enumerate(b)))
    sigma = GaloisElement(5, 2, s)
    assert sigma(x * y) == sigma(x) * sigma(y)
    assert sigma(x + y) == sigma(x) + sigma(y)


@given(coeffs)
def test_inverse(a):
    tw = tower(3, 2)
    x = tw.from_exponents(dict(enumerate(a)))
    if not x.is_zero():
        assert x * x.inverse() == tw.one


def test_rational_roundtrip():
    tw = tower(3, 2)
    assert tw.scalar(Fraction(2, 7)).rational_value() == Fraction(2, 7)


def test_not_a_unit():
    with pytest.raises(NotInGroup):
        GaloisElement(3, 1, 3)
