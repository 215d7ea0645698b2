from fractions import Fraction

from hypothesis import given
from hypothesis import strategies as st

from weildescent.cyclo import tower
from weildescent.localfield import char_eval, lattice_measure, residue, std_character, valuation

nonzero = st.fractions(min_value=-50, max_value=50, max_denominator=200).filter(lambda x: x != 0)


def test_character_values():
    lam = std_character(3)
    assert char_eval(lam, Fraction(1, 3), 1) == tower(3, 1).zeta(3)
    assert char_eval(lam, 2, 1) == tower(3, 1).one
    assert char_eval(std_character(5).twist(5), Fraction(1, 25), 1) == tower(5, 1).zeta(5)


def test_levels():
    assert std_character(3).level == 0
    assert std_character(3).twist(3).level == -1
    assert std_character(3).twist(Fraction(1, 9)).level == 2


@given(nonzero, nonzero)
def test_twist_composes(s, t):
    lam = std_character(5)
    assert lam.twist(s).twist(t) == lam.twist(s * t)


def test_measures():
    assert lattice_measure(std_character(3), 1, 1) == tower(3, 1).scalar(Fraction(1, 3))
    tw = tower(5, 1)
    assert lattice_measure(std_character(5).twist(5), 0, 1) == tw.sqrt_p * Fraction(1, 5)


@given(nonzero, st.sampled_from([3, 5, 7]))
def test_residue_matches_valuation(x, p):
    v = valuation(x, p)
    # x / p^v is a unit, so its residue mod p is nonzero
    assert residue(x / Fraction(p) ** v, p, 1) % p != 0
