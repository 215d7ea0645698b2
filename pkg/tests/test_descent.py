import pytest

from weildescent.cocycle import cocycle_data, transversal
from weildescent.cyclo import K_MAIN, tower
from weildescent.descent import (
    build_splitting,
    certificate_check,
    default_thetas,
    main_theorem_check,
    split_check,
    splitting,
    tractable_words,
    word_depth,
)
from weildescent.rep import Compose, Weil, operators_agree
from weildescent.schwartz import cell_atoms
from weildescent.sympl import parse_word


def test_p3_depth1_transversal_is_trivial():
    # H_1 has order (p-1)/2 * |U_1 / U_1^2| = 1 for p = 3
    assert len(transversal(3, 1)) == 1
    S = build_splitting(3, 1)
    probes = cell_atoms(3, 1, 0, 1, 1)
    for phi in probes:
        assert S.B.apply(S.alpha.apply(phi)) == phi


def test_thetas_are_deterministic():
    assert [t.to_json() for t in default_thetas(5, 2)] == [t.to_json() for t in default_thetas(5, 2)]


@pytest.mark.parametrize("cell", [(0, 1), (-1, 1)])
def test_alpha_inverts_B(cell):
    S = splitting(5, 2)
    S.ensure_cell(cell)
    for phi in cell_atoms(5, 1, *cell, 2)[:8]:
        assert S.B.apply(S.alpha.apply(phi)) == phi
        assert S.alpha.apply(S.B.apply(phi)) == phi


def test_certificate_p5():
    S = splitting(5, 2)
    probes = cell_atoms(5, 1, 0, 1, 2)
    for tau in transversal(5, 2):
        assert certificate_check(S, tau, probes).ok


@pytest.mark.parametrize("cell", [(0, 1), (-1, 1)])
def test_split_p3(cell):
    S = splitting(3, 2)
    probes = cell_atoms(3, 1, *cell, 2)
    for sigma in transversal(3, 2):
        assert split_check(S, sigma, probes).ok


def test_split_identity_p5():
    S = splitting(5, 2)
    assert split_check(S, _identity(5, 2), cell_atoms(5, 1, 0, 1, 2)).ok


def _identity(p, N):
    return next(s for s in transversal(p, N) if s.is_identity())


def test_main_examples():
    S = splitting(3, 2)
    atoms = cell_atoms(3, 1, 0, 1, 2)
    for word in ("id", "iota", "tau1"):
        r = main_theorem_check(S, parse_word(word), atoms, cell=(0, 1))
        assert r.ok, r.to_json()
    # alpha W(iota) alpha^{-1} = W(iota)
    lam = cocycle_data(3, 2).lam
    W = Weil(lam, parse_word("iota"), 2)
    assert operators_agree(S.conjugate(parse_word("iota")), W, cell_atoms(3, 1, -1, 1, 2)).ok


def test_main_values_are_K_rational():
    S = splitting(3, 2)
    op = S.conjugate(parse_word("tau1"))
    for phi in cell_atoms(3, 1, 0, 1, 2):
        assert op.apply(phi).is_rational_over(K_MAIN)


def test_escalation_is_reported():
    S = splitting(3, 2)
    r = main_theorem_check(S, parse_word("unip(1/3)"), cell_atoms(3, 1, -1, 1, 2), cell=(-1, 1))
    assert r.ok
    assert r.params["N"] == 3


def test_tractable_words_are_seeded():
    a = tractable_words(3, 1, 2, [(0, 1)], count=5, seed=1)
    b = tractable_words(3, 1, 2, [(0, 1)], count=5, seed=1)
    assert a == b
    assert len(set(a[0])) == 5
    for w in a[0]:
        assert word_depth(3, 1, parse_word(w), (0, 1), 2) is not None


def test_conjugate_matches_tabulated():
    from weildescent.descent import _tabulate

    S = splitting(3, 2)
    g = parse_word("tau1*unip(1)")
    tab = _tabulate(S, g, (0, 1), "composed")
    direct = Compose([S.alpha, Weil(cocycle_data(3, 2).lam, g, 2), S.B])
    probes = cell_atoms(3, 1, 0, 1, 2)
    probes.append(probes[0].scale(tower(3, 2).zeta(9)) + probes[1])
    assert operators_agree(tab, direct, probes).ok
