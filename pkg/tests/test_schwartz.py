from fractions import Fraction

from hypothesis import given
from hypothesis import strategies as st

from weildescent.cyclo import GaloisElement, tower
from weildescent.schwartz import SchwartzFunction, atom, cell_keys


def test_atoms():
    f = atom(3, 1 / Fraction(3), 1)
    assert f.cell == (-1, 1)
    assert f(Fraction(1, 3) + 3) == tower(3, 1).one
    assert f(Fraction(2, 3)).is_zero()
    assert atom(3, 0, 1) + atom(3, 1, 1) + atom(3, 2, 1) == atom(3, 0, 0)


def test_values_and_refinement():
    f = atom(3, 0, 0).scale(tower(3, 1).scalar(2))
    assert f((0,)) == tower(3, 1).scalar(2)
    r = f.refine(0, 2)
    assert r.cell == (0, 2)
    assert SchwartzFunction(3, 1, 0, 2, r.table, 1) == f


def test_galois_on_values():
    tw = tower(3, 1)
    assert atom(3, 0, 0).values_galois(GaloisElement(3, 1, 5)) == atom(3, 0, 0)
    z = atom(3, 0, 0).scale(tw.zeta(3))
    assert z.values_galois(GaloisElement(3, 1, 5)) == atom(3, 0, 0).scale(tw.zeta(3, 2))


def test_rationality():
    tw = tower(5, 1)
    assert atom(5, 0, 0).is_rational_over("Q")
    f = atom(5, 0, 0).scale(tw.sqrt_p)
    assert f.is_rational_over("K") and not f.is_rational_over("Q")
    assert not atom(5, 0, 0).scale(tw.zeta(5)).is_rational_over("K")


tables = st.dictionaries(st.integers(0, 8), st.integers(0, 35), max_size=9)
units = st.sampled_from([s for s in range(1, 36) if s % 2 and s % 3])


def _func(tab):
    tw = tower(3, 2)
    return SchwartzFunction(3, 1, -1, 1, {(c,): tw.root(e) for c, e in tab.items()}, 2)


@given(tables, units, units)
def test_galois_composes(tab, s, t):
    f = _func(tab)
    a, b = GaloisElement(3, 2, s), GaloisElement(3, 2, t)
    assert f.values_galois(a * b) == f.values_galois(b).values_galois(a)


@given(tables)
def test_json_roundtrip_and_canonical_form(tab):
    f = _func(tab)
    if not f.is_zero():
        assert SchwartzFunction.from_json(f.to_json()) == f
    # canonical forms agree whatever cell the table was written on
    g = SchwartzFunction(3, 1, -2, 2, f.table_at(-2, 2) if not f.is_zero() else {}, 2)
    assert g == f and g.cell == f.cell


def test_cell_keys_count():
    assert len(list(cell_keys(3, 2, 0, 2))) == 81
