import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from weildescent.cyclo import tower
from weildescent.localfield import char_eval, lattice_measure, std_character
from weildescent.rep import (
    Compose,
    Schrodinger,
    Weil,
    WeilInverse,
    _dot,
    _lookup,
    intertwine_check,
    operators_agree,
    projective_multiplier,
)
from weildescent.schwartz import SchwartzFunction, atom, cell_atoms, cell_keys
from weildescent.sympl import HeisenbergElement, g_s, heisenberg_generators, iota, parse_word, tau

P, N = 3, 2
LAM = std_character(P)


def fourier_oracle(phi, lam, N):
    """(W(tau_1) phi)(y) = sum over cosets x of phi(x) lambda(-x y) vol(p^k O), evaluated on a fine grid."""
    p, j, k = phi.p, phi.j, phi.k
    l = lam.level
    j2, k2 = l - k, l - j
    vol = lattice_measure(lam, k, N)
    out = {}
    for (d,) in cell_keys(p, 1, j2, k2):
        y = d * Fraction(p) ** j2
        acc = tower(p, N).zero
        for (c,), v in phi.table.items():
            acc = acc + v * char_eval(lam, -c * Fraction(p) ** j * y, N)
        out[(d,)] = acc * vol
    return SchwartzFunction(p, 1, j2, k2, out, N)


tables = st.dictionaries(st.integers(0, 8), st.integers(0, 35), min_size=1, max_size=9)
cells = st.sampled_from([(-1, 1), (0, 2), (0, 1), (1, 2)])


@given(tables, cells, st.sampled_from([1, 3, Fraction(1, 3), 2]))
def test_tau_matches_finite_fourier_sum(tab, cell, t):
    j, k = cell
    tw = tower(P, N)
    width = P ** (k - j)
    phi = SchwartzFunction(P, 1, j, k, {(c % width,): tw.root(e) for c, e in tab.items()}, N)
    lam = LAM.twist(t)
    assert Weil(lam, tau(1, 1), N).apply(phi) == fourier_oracle(phi, lam, N)


def test_examples():
    one = atom(P, 0, 0, N)
    assert Weil(LAM, tau(1, 1), N).apply(one) == one
    assert Weil(LAM, g_s(1, 3), N).apply(one) == atom(P, 0, 1, N).scale(tower(P, N).sqrt_p)
    assert Weil(LAM, parse_word("id"), N).apply(one) == one


def test_iota_is_parity():
    tw = tower(P, N)
    phi = SchwartzFunction(P, 1, -1, 1, {(c,): tw.root(c) for c in range(9)}, N)
    out = Weil(LAM, iota(1), N).apply(phi)
    for c in range(9):
        x = Fraction(c, 3)
        assert out(-x) == phi(x)


def test_schrodinger_examples():
    tw = tower(P, N)
    one = atom(P, 0, 0, N)
    t = Fraction(1, 3)
    assert Schrodinger(LAM, HeisenbergElement((0, 0), t), N).apply(one) == one.scale(char_eval(LAM, t, N))
    got = Schrodinger(LAM, HeisenbergElement((0, t), 0), N).apply(one)
    for x in range(3):
        assert got(x) == tw.zeta(3, x)
    shifted = Schrodinger(LAM, HeisenbergElement((t, 0), 0), N).apply(one)
    assert shifted == atom(P, -t, 0, N)


def _slow_schrodinger(S, phi):
    """The formula evaluated on every coset of the output cell."""
    p, n = S.lam.p, S.n
    tw = tower(p, S.N)
    x0, y0, t0 = S.h.x, S.h.y, S.h.t
    j2, k2 = S.out_cell(phi.j, phi.k)
    base = t0 + _dot(x0, y0) / 2
    pj = Fraction(p) ** j2
    table = {}
    for key in cell_keys(p, n, j2, k2):
        xp = tuple(c * pj for c in key)
        v = _lookup(phi, tuple(a + b for a, b in zip(x0, xp)))
        if v is not None:
            table[key] = v * tw.root(S.lam.exponent(base + _dot(xp, y0), S.N))
    return SchwartzFunction(p, n, j2, k2, table, S.N)


vals = st.sampled_from([Fraction(0), Fraction(1), Fraction(-1), Fraction(1, 3), Fraction(1, 2), Fraction(-5, 2), Fraction(3)])


@given(st.lists(vals, min_size=3, max_size=3), tables, cells)
def test_schrodinger_against_pointwise_formula(v, tab, cell):
    j, k = cell
    tw = tower(P, 4)
    width = P ** (k - j)
    phi = SchwartzFunction(P, 1, j, k, {(c % width,): tw.root(e) for c, e in tab.items()}, 4)
    S = Schrodinger(LAM, HeisenbergElement(tuple(v[:2]), v[2]), 4)
    assert S.apply(phi) == _slow_schrodinger(S, phi)


@pytest.mark.parametrize("word", ["tau1", "unip(1/3)", "levi(2)", "g(3)", "lower(3)", "tau1*unip(1)*tau1"])
def test_intertwining(word):
    # S(y/p) composed with unip(1/p) reaches roots of order 27, hence depth 3
    g = parse_word(word)
    probes = cell_atoms(P, 1, 0, 1, 3)
    for h in heisenberg_generators(1, P):
        assert intertwine_check(LAM, g, h, probes, 3).ok


@pytest.mark.parametrize("seed", range(8))
def test_modes_agree(seed):
    from weildescent.sympl import random_word

    _, g = random_word(1, 3, random.Random(seed), P)
    probes = cell_atoms(P, 1, 0, 1, 4)
    assert operators_agree(Weil(LAM, g, 4, "direct"), Weil(LAM, g, 4, "composed"), probes).ok


def test_inverse_and_multiplier():
    g = parse_word("tau1*unip(1)")
    probes = cell_atoms(P, 1, 0, 1, N)
    assert operators_agree(Compose([WeilInverse(LAM, g, N), Weil(LAM, g, N)]), Weil(LAM, parse_word("id"), N), probes).ok
    c = projective_multiplier(LAM, tau(1, 1), tau(1, 1), probes, N)
    tw = tower(P, N)
    assert any(c == tw.root(e) for e in range(tw.m))
