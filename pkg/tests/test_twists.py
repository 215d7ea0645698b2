from fractions import Fraction

import pytest

from weildescent.cocycle import teichmuller_eps
from weildescent.cyclo import GaloisElement, fixing_group, tower
from weildescent.localfield import char_eval, std_character
from weildescent.rep import GaloisConjugate, Weil, operators_agree
from weildescent.schwartz import cell_atoms
from weildescent.sympl import generator_words, parse_word, tau
from weildescent.twists import (
    char_galois_partner,
    g_t_fixed,
    frak_g,
    character_twist_measure,
    dilation_measure,
    measure_rationality,
    galois_transport,
    dilation_twist,
    galois_twist,
    galois_conjugation,
    unit_sqrt,
)

N = 2


def _atoms(p):
    return cell_atoms(p, 1, 0, 1, N)


def test_galois_partner_on_values():
    lam = std_character(5)
    sigma = GaloisElement(5, 2, 7)
    s = char_galois_partner(sigma, lam)
    assert s == 7
    for x in [Fraction(1, 5), Fraction(3, 25), Fraction(7, 25), Fraction(2, 5), Fraction(11, 25)]:
        assert sigma(char_eval(lam, x, 2)) == char_eval(lam, s * x, 2)


def test_conjugate_of_rational_operator():
    # a dilation by a unit has rational matrix entries, so Galois fixes it
    W = Weil(std_character(3), parse_word("g(2)"), N)
    assert operators_agree(GaloisConjugate(GaloisElement(3, 2, 5), W), W, _atoms(3)).ok


def test_galois_twist_tau_example():
    lam = std_character(3)
    assert galois_twist(lam, tau(1, 1), 4, N, _atoms(3)).ok


@pytest.mark.parametrize("p", [3, 5])
def test_twist_identities(p):
    lam = std_character(p)
    atoms = _atoms(p)
    sq = [GaloisElement(p, N, s) for s in fixing_group(p, N, "Q(sqrt p)")]
    for w in generator_words(1, p):
        g = parse_word(w)
        for s in (1, p, Fraction(1, p), 2, teichmuller_eps(p, N)):
            assert dilation_twist(lam, g, s, N, atoms).ok
        for s in (p, Fraction(1, p), 2):
            assert character_twist_measure(lam, g, s, N).ok and dilation_measure(lam, g, s, N).ok
        assert measure_rationality(lam, g, N).ok
        for sigma in sq:
            assert galois_twist(lam, g, sigma, N, atoms).ok
            assert galois_transport(lam, g, sigma, N, atoms).ok
        for s in frak_g(p, N):
            assert galois_conjugation(lam, g, s, N, atoms).ok
    for s in frak_g(p, N):
        for t in (2, -1, p):
            assert g_t_fixed(lam, t, s, N, atoms).ok


def test_galois_conjugation_trivial_on_unit_part():
    # sigma acting on Q(lambda) as eps^2 * 1
    p = 5
    s = [x for x in frak_g(p, N) if x % p**N == teichmuller_eps(p, N) ** 2 % p**N][0]
    assert galois_conjugation(std_character(p), tau(1, 1), s, N, _atoms(p)).ok


def test_unit_sqrt():
    for a in (4, 9, 11, 16):
        r = unit_sqrt(a, 5, 2)
        assert r * r % 25 == a % 25


def test_wrong_group_is_rejected():
    from weildescent.errors import NotInGroup

    with pytest.raises(NotInGroup):
        galois_twist(std_character(5), tau(1, 1), 3, N, _atoms(5))
    with pytest.raises(NotInGroup):
        unit_sqrt(2, 5, 2)
    assert tower(5, 2).degree == 40
