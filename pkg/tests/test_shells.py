import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weildescent.cyclo import tower
from weildescent.errors import SingularOperator
from weildescent.schwartz import cell_keys
from weildescent.shells import (
    group_ring_apply,
    group_ring_invertible,
    matmod,
    orbits,
    solve_group_ring,
    unit_generator,
)


@pytest.mark.parametrize("p,n,j,k", [(3, 1, 0, 2), (5, 1, -1, 1), (3, 2, 0, 1), (7, 1, 0, 2)])
def test_orbits_partition_the_cell(p, n, j, k):
    orbs = orbits(p, n, j, k)
    keys = [key for o in orbs for key in o.keys]
    assert sorted(keys) == sorted(cell_keys(p, n, j, k))
    g, mod = unit_generator(p), p ** (k - j)
    for o in orbs:
        nxt = tuple(c * g % mod for c in o.keys[-1])
        assert nxt == o.keys[0]


def test_unit_generator_is_primitive_mod_p_squared():
    for p in (3, 5, 7, 11, 13):
        g = unit_generator(p)
        assert len({pow(g, a, p * p) for a in range(p * (p - 1))}) == p * (p - 1)


def _elt(tw, coeffs):
    return tw.from_exponents(dict(enumerate(coeffs)))


vecs = st.lists(st.lists(st.integers(-4, 4), min_size=1, max_size=12), min_size=1, max_size=6)


@given(vecs, st.data())
def test_apply_matches_convolution(beta_c, data):
    tw = tower(3, 2)
    n = len(beta_c)
    beta = [_elt(tw, c) for c in beta_c]
    x = [_elt(tw, data.draw(st.lists(st.integers(-4, 4), max_size=12))) for _ in range(n)]
    got = group_ring_apply(beta, x, tw)
    for a in range(n):
        want = sum((beta[c] * x[(a + c) % n] for c in range(n)), tw.zero)
        assert got[a] == want


@given(st.integers(0, 10**6), st.sampled_from([1, 2, 4, 6]))
def test_solve_recovers_x(seed, n):
    import random

    rng = random.Random(seed)
    tw = tower(3, 2)
    beta = [_elt(tw, [rng.randint(-9, 9) for _ in range(tw.degree)]) for _ in range(n)]
    if not group_ring_invertible(beta, tw):
        return
    xs = [[_elt(tw, [rng.randint(-3, 3) for _ in range(tw.degree)]) for _ in range(n)] for _ in range(2)]
    rhs = [group_ring_apply(beta, x, tw) for x in xs]
    assert solve_group_ring(beta, rhs, tw) == xs


def test_singular_element():
    tw = tower(3, 1)
    beta = [tw.one, tw.one]  # 1 + shift vanishes at the character -1
    assert not group_ring_invertible(beta, tw)
    with pytest.raises(SingularOperator):
        solve_group_ring(beta, [[tw.one, tw.zero]], tw)


def test_matmod_exact():
    rng = np.random.default_rng(0)
    l = 2**21 - 9
    A = rng.integers(0, l, size=(7, 3000))
    B = rng.integers(0, l, size=(3000, 5))
    want = (A.astype(object) @ B.astype(object)) % l
    assert (matmod(A, B, l) == want.astype(np.int64)).all()
