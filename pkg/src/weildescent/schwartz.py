"""Bruhat-Schwartz functions on F^n with values in E_N, as exact finite tables.

A function lives on a cell (j, k): it vanishes off p^j O^n and is constant on
cosets of p^k O^n.  A coset x = p^j (c_1, ..., c_n) + p^k O^n is keyed by the
integer tuple (c_1, ..., c_n) with 0 <= c_i < p^(k-j).  Only nonzero entries
are stored.  Every instance is kept in canonical form: largest j, then
smallest k.  The zero function sits on the cell (0, 0).
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .cyclo import CyclotomicNumber, GaloisElement, in_subfield, tower
from .errors import TowerTooShallow
from .localfield import INF, residue, valuation

__all__ = ["SchwartzFunction", "atom", "cell_atoms", "cell_keys", "indicator_lattice"]


def _coerce_value(x, tw):
    if isinstance(x, CyclotomicNumber):
        if x.tower.N > tw.N:
            raise ValueError("value lives in a deeper tower than the function")
        return x.lift(tw.N)
    return tw.scalar(x)


def _vint(c: int, p: int) -> int:
    if c == 0:
        return INF
    v = 0
    while c % p == 0:
        c //= p
        v += 1
    return v


def cell_keys(p: int, n: int, j: int, k: int):
    """All coset keys of the cell (j, k) in lexicographic order."""
    return itertools.product(range(p ** (k - j)), repeat=n)


class SchwartzFunction:
    """phi : F^n -> E_N, locally constant with compact support."""

    __slots__ = ("p", "n", "N", "j", "k", "table", "_hash")

    def __init__(self, p, n, j, k, table, N=1, canonical=False):
        if j > k:
            raise ValueError(f"cell needs j <= k, got ({j}, {k})")
        self.p = p
        self.n = n
        self.N = N
        self.j = j
        self.k = k
        self.table = {key: v for key, v in table.items() if not v.is_zero()}
        self._hash = None
        if not canonical:
            self._canonicalize()

    # -- construction -----------------------------------------------------

    @classmethod
    def zero(cls, p, n, N=1):
        return cls(p, n, 0, 0, {}, N, canonical=True)

    @classmethod
    def from_values(cls, p, n, j, k, values, N=1):
        """Build from a mapping key -> value (rationals or cyclotomics)."""
        tw = tower(p, N)
        width = p ** (k - j)
        table = {}
        for key, v in values.items():
            key = tuple(int(c) % width for c in key)
            if len(key) != n:
                raise ValueError(f"key {key} has wrong length for n={n}")
            table[key] = _coerce_value(v, tw)
        return cls(p, n, j, k, table, N)

    @classmethod
    def from_function(cls, p, n, j, k, fn, N=1):
        """Tabulate fn(x) over the coset representatives p^j c of the cell."""
        tw = tower(p, N)
        pj = Fraction(p) ** j
        table = {}
        for key in cell_keys(p, n, j, k):
            v = fn(tuple(c * pj for c in key))
            table[key] = _coerce_value(v, tw)
        return cls(p, n, j, k, table, N)

    # -- canonical form -----------------------------------------------------

    def _canonicalize(self):
        p, n = self.p, self.n
        if not self.table:
            self.j = self.k = 0
            return
        # raise j to the smallest valuation present in the support
        shift = min(min(_vint(c, p) for c in key) for key in self.table)
        shift = min(shift, self.k - self.j)
        if shift:
            d = p**shift
            self.table = {tuple(c // d for c in key): v for key, v in self.table.items()}
            self.j += shift
        # lower k while the table is constant on the coarser cosets
        while self.k > self.j:
            width = p ** (self.k - self.j - 1)
            groups = {}
            for key, v in self.table.items():
                coarse = tuple(c % width for c in key)
                g = groups.get(coarse)
                if g is None:
                    groups[coarse] = [v, 1]
                elif g[0] != v:
                    return
                else:
                    g[1] += 1
            full = p**n
            if any(cnt != full for _, cnt in groups.values()):
                return
            self.table = {key: g[0] for key, g in groups.items()}
            self.k -= 1

    # -- views ---------------------------------------------------------------

    @property
    def cell(self):
        return (self.j, self.k)

    @property
    def tower(self):
        return tower(self.p, self.N)

    def is_zero(self):
        return not self.table

    def table_at(self, j, k):
        """The value table over the finer cell (j, k), zeros omitted."""
        if self.is_zero():
            return {}
        if j > self.j or k < self.k:
            raise ValueError(f"cell ({j},{k}) does not refine ({self.j},{self.k})")
        p, n = self.p, self.n
        up = p ** (self.j - j)
        step = p ** (self.k - j)
        fan = range(p ** (k - self.k))
        if self.n == 1:
            return {(c * up + u * step,): v for (c,), v in self.table.items() for u in fan}
        out = {}
        for key, v in self.table.items():
            base = [c * up for c in key]
            for us in itertools.product(fan, repeat=n):
                out[tuple(b + u * step for b, u in zip(base, us))] = v
        return out

    def refine(self, j, k):
        """A non-canonical copy over the finer cell; mainly for inspection."""
        f = SchwartzFunction(self.p, self.n, j, k, self.table_at(j, k), self.N, canonical=True)
        return f

    def key_of(self, x, j=None, k=None):
        """Coset key of the point x on the cell (j, k), or None if x is off its support."""
        j = self.j if j is None else j
        k = self.k if k is None else k
        pj = Fraction(self.p) ** j
        out = []
        for xi in x:
            xi = Fraction(xi)
            if valuation(xi, self.p) < j:
                return None
            out.append(residue(xi / pj, self.p, k - j))
        return tuple(out)

    def eval_at(self, x) -> CyclotomicNumber:
        if not isinstance(x, (tuple, list)):
            x = (x,)
        if len(x) != self.n:
            raise ValueError(f"point has {len(x)} coordinates, expected {self.n}")
        key = self.key_of(x)
        if key is None:
            return self.tower.zero
        v = self.table.get(key)
        return self.tower.zero if v is None else v

    __call__ = eval_at

    def values(self):
        return list(self.table.values())

    def support_points(self):
        """Coset representatives (as rational vectors) where phi is nonzero."""
        pj = Fraction(self.p) ** self.j
        return [tuple(c * pj for c in key) for key in sorted(self.table)]

    # -- linear structure ---------------------------------------------------------

    def _check(self, other):
        if not isinstance(other, SchwartzFunction):
            raise TypeError(f"expected a SchwartzFunction, got {type(other).__name__}")
        if (self.p, self.n) != (other.p, other.n):
            raise ValueError("functions on different spaces")

    def lift(self, N):
        if N == self.N:
            return self
        table = {key: v.lift(N) for key, v in self.table.items()}
        return SchwartzFunction(self.p, self.n, self.j, self.k, table, N, canonical=True)

    def __add__(self, other):
        if isinstance(other, int) and other == 0:
            return self
        self._check(other)
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        N = max(self.N, other.N)
        a, b = self.lift(N), other.lift(N)
        j, k = min(a.j, b.j), max(a.k, b.k)
        ta = a.table_at(j, k)
        for key, v in b.table_at(j, k).items():
            w = ta.get(key)
            ta[key] = v if w is None else w + v
        return SchwartzFunction(self.p, self.n, j, k, ta, N)

    __radd__ = __add__

    def __neg__(self):
        table = {key: -v for key, v in self.table.items()}
        return SchwartzFunction(self.p, self.n, self.j, self.k, table, self.N, canonical=True)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        if isinstance(c, CyclotomicNumber):
            N = max(self.N, c.tower.N)
            c = c.lift(N)
            f = self.lift(N)
        else:
            c = Fraction(c)
            f = self
            N = self.N
        if c == 0:
            return SchwartzFunction.zero(self.p, self.n, N)
        table = {key: v * c for key, v in f.table.items()}
        return SchwartzFunction(self.p, self.n, self.j, self.k, table, N, canonical=True)

    def __mul__(self, c):
        if isinstance(c, SchwartzFunction):
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    # -- Galois -------------------------------------------------------------------

    def values_galois(self, sigma):
        """sigma applied entrywise: (sigma phi)(x) = sigma(phi(x))."""
        s = sigma.s if isinstance(sigma, GaloisElement) else int(sigma)
        if isinstance(sigma, GaloisElement):
            if sigma.N > self.N:
                return self.lift(sigma.N).values_galois(sigma)
            if sigma.N < self.N:
                raise TowerTooShallow(self.N, sigma.N)
        table = {key: v.galois(s % v.tower.m) for key, v in self.table.items()}
        return SchwartzFunction(self.p, self.n, self.j, self.k, table, self.N, canonical=True)

    galois = values_galois

    def is_rational_over(self, K) -> bool:
        return all(in_subfield(v, K) for v in self.table.values())

    # -- comparison / serialization ---------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, SchwartzFunction):
            return NotImplemented
        if (self.p, self.n) != (other.p, other.n):
            return False
        if self.cell != other.cell or len(self.table) != len(other.table):
            return False
        for key, v in self.table.items():
            w = other.table.get(key)
            if w is None or w != v:
                return False
        return True

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __hash__(self):
        if self._hash is None:
            items = tuple(sorted((key, hash(v)) for key, v in self.table.items()))
            self._hash = hash((self.p, self.n, self.j, self.k, items))
        return self._hash

    def __repr__(self):
        return f"SchwartzFunction(p={self.p}, n={self.n}, cell=({self.j},{self.k}), support={len(self.table)})"

    def to_json(self) -> dict:
        pj = Fraction(self.p) ** self.j
        table = {}
        for key in sorted(self.table):
            label = ",".join(str(c * pj) for c in key)
            table[label] = self.table[key].to_json()
        return {"n": self.n, "j": self.j, "k": self.k, "table": table}

    @classmethod
    def from_json(cls, data, p=None):
        n, j, k = int(data["n"]), int(data["j"]), int(data["k"])
        items = data["table"]
        values = {}
        N = 1
        for label, num in items.items():
            v = CyclotomicNumber.from_json(num)
            if p is None:
                p = v.p
            N = max(N, v.N)
            pj = Fraction(p) ** j
            coords = [Fraction(c) / pj for c in label.split(",")]
            key = tuple(residue(c, p, k - j) for c in coords)
            values[key] = v
        if p is None:
            raise ValueError("cannot infer p from an empty table; pass p explicitly")
        return cls.from_values(p, n, j, k, values, N)


def atom(p, c, k, N=1) -> SchwartzFunction:
    """Indicator of c + p^k O^n; c is a rational vector (or a scalar when n = 1)."""
    if not isinstance(c, (list, tuple)):
        c = (c,)
    c = [Fraction(x) for x in c]
    j = min(min(valuation(x, p) for x in c), k)
    pj = Fraction(p) ** j
    key = tuple(residue(x / pj, p, k - j) for x in c)
    one = tower(p, N).one
    return SchwartzFunction(p, len(c), j, k, {key: one}, N)


def indicator_lattice(p, n, j, N=1) -> SchwartzFunction:
    """1 on p^j O^n."""
    return atom(p, (0,) * n, j, N)


def cell_atoms(p, n, j, k, N=1):
    """All atoms of the cell (j, k), lexicographic in their keys."""
    one = tower(p, N).one
    return [SchwartzFunction(p, n, j, k, {key: one}, N) for key in cell_keys(p, n, j, k)]
