from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from weildescent.sympl import (
    HeisenbergElement,
    SymplecticElement,
    bruhat_siegel,
    conj_fs,
    identity,
    levi,
    lower,
    parse_heisenberg,
    parse_word,
    random_word,
    tau,
    unip,
)

small = st.fractions(min_value=-6, max_value=6, max_denominator=9)


def _recompose(dec, n):
    return dec.p1 * tau(n, dec.i) * dec.p2 if dec.i else dec.p1 * dec.p2


def test_parabolic_and_tau():
    g = levi(2) * unip(Fraction(1, 3))
    dec = bruhat_siegel(g, 3)
    assert dec.i == 0
    dec = bruhat_siegel(tau(1, 1), 3)
    assert dec.i == 1 and dec.p1 == identity(1) and dec.p2 == identity(1)


@given(small.filter(lambda u: u != 0))
def test_lower_unipotent(u):
    g = lower(u)
    dec = bruhat_siegel(g, 3)
    assert dec.i == 1 and _recompose(dec, 1) == g


@given(st.integers(0, 10**6), st.sampled_from([1, 2]))
def test_random_words_decompose(seed, n):
    import random

    _, g = random_word(n, 3, random.Random(seed), 5)
    assert g.is_symplectic()
    dec = bruhat_siegel(g, 5)
    assert _recompose(dec, n) == g


@given(small.filter(lambda s: s != 0), st.integers(0, 10**6))
def test_similitude_conjugation(s, seed):
    import random

    _, g = random_word(1, 2, random.Random(seed), 3)
    assert conj_fs(conj_fs(g, s), 1 / s) == g
    if g.in_parabolic():
        assert conj_fs(g, s).in_parabolic()


vec = st.tuples(small, small, small)


@given(vec, vec, vec)
def test_heisenberg_group_law(a, b, c):
    h = [HeisenbergElement(x[:2], x[2]) for x in (a, b, c)]
    assert (h[0] * h[1]) * h[2] == h[0] * (h[1] * h[2])
    assert h[0] * h[0].inverse() == HeisenbergElement((0, 0), 0)


def test_parsing():
    assert parse_word("tau1*tau1") == parse_word("iota")
    assert parse_heisenberg("y(1/3),0") == HeisenbergElement((0, Fraction(1, 3)), 0)
    with pytest.raises(ValueError, match="position"):
        parse_word("tau1*bogus(2)")


def test_symplectic_check():
    with pytest.raises(ValueError):
        SymplecticElement([[1, 1], [1, 1]])
