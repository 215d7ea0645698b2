"""Exact arithmetic in the cyclotomic tower Q(zeta_m), m = 4 p^N.

Elements are stored as rational polynomials reduced modulo the m-th
cyclotomic polynomial.  For m = 4 p^N that polynomial is sparse:

    Phi_m(x) = sum_{k=0}^{p-1} (-1)^k x^(2 k p^(N-1))

The polynomial arithmetic itself is delegated to python-flint.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd

from flint import fmpq, fmpq_poly

from .errors import NotInGroup

__all__ = [
    "Tower",
    "tower",
    "CyclotomicNumber",
    "GaloisElement",
    "cyc_make",
    "sqrt_table",
    "in_subfield",
    "fixing_group",
    "subgroup_generators",
    "legendre",
    "is_prime",
    "SUBFIELDS",
]

# canonical names of the subfields we can test membership in
Q = "Q"
Q_SQRT_P = "Q(sqrt p)"
K_MAIN = "Q(sqrt p, sqrt -p)"
Q_ZETA_P_I = "Q(zeta_p, i)"
SUBFIELDS = (Q, Q_SQRT_P, K_MAIN, Q_ZETA_P_I)
_ALIASES = {
    "Q(sqrt q)": Q_SQRT_P,
    "Q(sqrt p,sqrt -p)": K_MAIN,
    "Q(sqrt p, i)": K_MAIN,
    "K": K_MAIN,
    "Q(zeta_p,i)": Q_ZETA_P_I,
}


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a|p) for an odd prime p."""
    r = pow(a % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def chi4(s: int) -> int:
    return 1 if s % 4 == 1 else -1


def _to_fmpq(c) -> fmpq:
    if isinstance(c, fmpq):
        return c
    if isinstance(c, int):
        return fmpq(c)
    if isinstance(c, Fraction):
        return fmpq(c.numerator, c.denominator)
    if isinstance(c, str):
        f = Fraction(c)
        return fmpq(f.numerator, f.denominator)
    raise TypeError(f"cannot coerce {type(c).__name__} to a rational")


def _to_fraction(q: fmpq) -> Fraction:
    return Fraction(int(q.p), int(q.q))


class Tower:
    """The field E_N = Q(zeta_m) with m = 4 p^N, plus cached constants.

    Use :func:`tower` to obtain instances; they are shared per (p, N).
    """

    def __init__(self, p: int, N: int):
        if not isinstance(p, int) or not is_prime(p):
            raise ValueError(f"p must be a prime, got {p!r}")
        if p == 2:
            raise ValueError("p = 2 is not supported")
        if not isinstance(N, int) or N < 1:
            raise ValueError(f"tower depth N must be >= 1, got {N!r}")
        self.p = p
        self.N = N
        self.pN = p**N
        self.m = 4 * self.pN
        self.half = self.m // 2
        self.block = 2 * p ** (N - 1)
        self.degree = (p - 1) * self.block
        coeffs = [0] * (self.degree + 1)
        for k in range(p):
            coeffs[k * self.block] = (-1) ** k
        self.modulus = fmpq_poly(coeffs)
        self._roots = {}

    def __repr__(self):
        return f"Tower(p={self.p}, N={self.N})"

    def __reduce__(self):
        return (tower, (self.p, self.N))

    # -- element construction --------------------------------------------

    def _wrap(self, poly) -> "CyclotomicNumber":
        return CyclotomicNumber(self, poly, _reduced=True)

    def scalar(self, c) -> "CyclotomicNumber":
        return self._wrap(fmpq_poly([_to_fmpq(c)]))

    @property
    def zero(self) -> "CyclotomicNumber":
        return self.scalar(0)

    @property
    def one(self) -> "CyclotomicNumber":
        return self.scalar(1)

    def root(self, e: int) -> "CyclotomicNumber":
        """zeta_m ** e."""
        e %= self.m
        r = self._roots.get(e)
        if r is None:
            r = self.from_exponents({e: 1})
            self._roots[e] = r
        return r

    def zeta(self, d: int, e: int = 1) -> "CyclotomicNumber":
        """zeta_d ** e for a divisor d of m, with zeta_d = zeta_m^(m/d)."""
        if self.m % d:
            raise ValueError(f"{d} does not divide the conductor {self.m}")
        return self.root(e * (self.m // d))

    def from_exponents(self, counts) -> "CyclotomicNumber":
        """sum_e c_e zeta_m^e from a mapping exponent -> rational coefficient."""
        acc = [0] * self.half
        half = self.half
        for e, c in counts.items():
            if not c:
                continue
            e %= self.m
            if e >= half:
                acc[e - half] -= c
            else:
                acc[e] += c
        return self._from_folded(acc)

    def _from_folded(self, acc) -> "CyclotomicNumber":
        # acc holds coefficients of x^0..x^(m/2-1); x^(m/2) = -1 already applied
        if any(isinstance(c, Fraction) for c in acc):
            acc = [_to_fmpq(c) for c in acc]
        poly = fmpq_poly(acc)
        if poly.degree() >= self.degree:
            poly = poly % self.modulus
        return self._wrap(poly)

    def from_coeffs(self, coeffs) -> "CyclotomicNumber":
        return self._from_folded_unbounded(coeffs)

    def _from_folded_unbounded(self, coeffs):
        acc = [0] * self.half
        for e, c in enumerate(coeffs):
            c = _to_fmpq(c)
            if not c:
                continue
            e %= self.m
            if e >= self.half:
                acc[e - self.half] -= c
            else:
                acc[e] += c
        return self._wrap(fmpq_poly(acc) % self.modulus)

    # -- distinguished elements ------------------------------------------

    @property
    def i(self) -> "CyclotomicNumber":
        return self.root(self.m // 4)

    @property
    def gauss(self) -> "CyclotomicNumber":
        g = self._roots.get("gauss")
        if g is None:
            p = self.p
            g = self.from_exponents({a * (self.m // p): legendre(a, p) for a in range(1, p)})
            self._roots["gauss"] = g
        return g

    @property
    def sqrt_pstar(self) -> "CyclotomicNumber":
        return self.gauss

    @property
    def sqrt_p(self) -> "CyclotomicNumber":
        if self.p % 4 == 1:
            return self.gauss
        return -(self.i * self.gauss)

    @property
    def sqrt_mp(self) -> "CyclotomicNumber":
        if self.p % 4 == 1:
            return self.i * self.gauss
        return self.gauss

    def sqrt_p_power(self, e: int) -> "CyclotomicNumber":
        """p ** (e/2) with the branch of sqrt(p) fixed by :meth:`sqrt_p`."""
        key = ("sqrtpow", e)
        r = self._roots.get(key)
        if r is None:
            q, odd = divmod(e, 2)
            r = self.scalar(Fraction(self.p) ** q)
            if odd:
                r = r * self.sqrt_p
            self._roots[key] = r
        return r

    def units(self):
        return [s for s in range(1, self.m) if gcd(s, self.m) == 1]

    def galois(self, s: int) -> "GaloisElement":
        return GaloisElement(self.p, self.N, s)


@lru_cache(maxsize=None)
def tower(p: int, N: int) -> Tower:
    return Tower(p, N)


class CyclotomicNumber:
    """An exact element of Q(zeta_m), m = 4 p^N, in reduced power-basis form."""

    __slots__ = ("tower", "_poly", "_key")

    def __init__(self, tw: Tower, poly, _reduced=False):
        if not _reduced:
            poly = fmpq_poly(poly) % tw.modulus
        self.tower = tw
        self._poly = poly
        self._key = None

    # -- structure --------------------------------------------------------

    @property
    def p(self):
        return self.tower.p

    @property
    def N(self):
        return self.tower.N

    @property
    def conductor(self):
        return self.tower.m

    @property
    def coeffs(self) -> list:
        """Power-basis coefficients as Fractions, length phi(m)."""
        c = [_to_fraction(q) for q in self._poly.coeffs()]
        return c + [Fraction(0)] * (self.tower.degree - len(c))

    def is_zero(self) -> bool:
        return self._poly.degree() < 0

    def is_rational(self) -> bool:
        return self._poly.degree() <= 0

    def rational_value(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("not a rational number")
        c = self._poly.coeffs()
        return _to_fraction(c[0]) if c else Fraction(0)

    def lift(self, N: int) -> "CyclotomicNumber":
        """Embed into Q(zeta_{4p^N}) via zeta_m -> zeta_{m'}^(m'/m)."""
        if N == self.tower.N:
            return self
        if N < self.tower.N:
            raise ValueError("cannot lift to a shallower tower")
        tw = tower(self.tower.p, N)
        step = tw.m // self.tower.m
        c = self._poly.coeffs()
        out = [0] * (len(c) - 1) * step + [0] if c else []
        for e, q in enumerate(c):
            if q:
                out[e * step] = q
        # degree stays below phi(m'), no reduction needed
        return CyclotomicNumber(tw, fmpq_poly(out), _reduced=True)

    def _coerce(self, other):
        if isinstance(other, CyclotomicNumber):
            if other.tower is self.tower:
                return self, other
            if other.tower.p != self.tower.p:
                raise ValueError("cyclotomic numbers over different primes")
            N = max(self.tower.N, other.tower.N)
            return self.lift(N), other.lift(N)
        if isinstance(other, (int, Fraction, fmpq)):
            return self, self.tower.scalar(other)
        return None, None

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        a, b = self._coerce(other)
        if a is None:
            return NotImplemented
        return CyclotomicNumber(a.tower, a._poly + b._poly, _reduced=True)

    __radd__ = __add__

    def __neg__(self):
        return CyclotomicNumber(self.tower, -self._poly, _reduced=True)

    def __sub__(self, other):
        a, b = self._coerce(other)
        if a is None:
            return NotImplemented
        return CyclotomicNumber(a.tower, a._poly - b._poly, _reduced=True)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        if a is None:
            return NotImplemented
        return CyclotomicNumber(a.tower, b._poly - a._poly, _reduced=True)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CyclotomicNumber(self.tower, self._poly * _to_fmpq(other), _reduced=True)
        a, b = self._coerce(other)
        if a is None:
            return NotImplemented
        prod = a._poly * b._poly
        if prod.degree() >= a.tower.degree:
            prod = prod % a.tower.modulus
        return CyclotomicNumber(a.tower, prod, _reduced=True)

    __rmul__ = __mul__

    def inverse(self) -> "CyclotomicNumber":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in a cyclotomic field")
        if self.is_rational():
            return self.tower.scalar(1 / self.rational_value())
        g, s, _ = self._poly.xgcd(self.tower.modulus)
        # Phi_m is irreducible, so g is a nonzero constant
        return CyclotomicNumber(self.tower, (s / g.coeffs()[0]) % self.tower.modulus, _reduced=True)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return self * (1 / Fraction(other))
        a, b = self._coerce(other)
        if a is None:
            return NotImplemented
        return a * b.inverse()

    def __rtruediv__(self, other):
        a, b = self._coerce(other)
        if a is None:
            return NotImplemented
        return b * a.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        result = self.tower.one
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- comparison -------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.rational_value() == other
        if not isinstance(other, CyclotomicNumber):
            return NotImplemented
        if other.tower is not self.tower:
            if other.tower.p != self.tower.p:
                return False
            a, b = self._coerce(other)
            return a._poly == b._poly
        return self._poly == other._poly

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def key(self):
        """A hashable canonical key, stable across equal values in one tower."""
        if self._key is None:
            self._key = str(self._poly)
        return self._key

    def __hash__(self):
        if self.is_rational():
            return hash(self.rational_value())
        return hash((self.tower.p, self.tower.N, self.key()))

    # -- Galois -----------------------------------------------------------

    def galois(self, s: int) -> "CyclotomicNumber":
        """Apply sigma_s : zeta_m -> zeta_m^s."""
        tw = self.tower
        if gcd(s, tw.m) != 1:
            raise NotInGroup(f"{s} is not a unit modulo {tw.m}")
        s %= tw.m
        if s == 1 or self.is_rational():
            return self
        acc = [0] * tw.half
        half, m = tw.half, tw.m
        for e, c in enumerate(self._poly.coeffs()):
            if c:
                t = (e * s) % m
                if t >= half:
                    acc[t - half] -= c
                else:
                    acc[t] += c
        return CyclotomicNumber(tw, fmpq_poly(acc) % tw.modulus, _reduced=True)

    # -- display / serialization --------------------------------------------

    def __repr__(self):
        return f"CyclotomicNumber(p={self.p}, N={self.N}, {self._poly})"

    def __str__(self):
        if self.is_rational():
            return str(self.rational_value())
        return str(self._poly).replace("x", f"z{self.tower.m}")

    def to_json(self) -> dict:
        return {
            "p": self.tower.p,
            "N": self.tower.N,
            "coeffs": [str(c) for c in self.coeffs],
        }

    @classmethod
    def from_json(cls, data) -> "CyclotomicNumber":
        tw = tower(int(data["p"]), int(data["N"]))
        return tw.from_coeffs([Fraction(c) for c in data["coeffs"]])


def cyc_make(p: int, N: int, coeff_map) -> CyclotomicNumber:
    """Build sum c_e zeta^e.

    Keys of ``coeff_map`` are exponents of zeta_{4p^N}, or pairs (d, e)
    meaning zeta_d^e for a divisor d of the conductor.
    """
    tw = tower(p, N)
    counts = {}
    for key, c in coeff_map.items():
        if isinstance(key, tuple):
            d, e = key
            if tw.m % d:
                raise ValueError(f"{d} does not divide the conductor {tw.m}")
            key = e * (tw.m // d)
        key %= tw.m
        counts[key] = counts.get(key, 0) + Fraction(c)
    return tw.from_exponents(counts)


class GaloisElement:
    """sigma_s in Gal(Q(zeta_{4p^N})/Q), acting by zeta -> zeta^s."""

    __slots__ = ("p", "N", "s")

    def __init__(self, p: int, N: int, s: int):
        m = 4 * p**N
        if gcd(s, m) != 1:
            raise NotInGroup(f"{s} is not a unit modulo {m}")
        self.p = p
        self.N = N
        self.s = s % m

    @property
    def modulus(self):
        return 4 * self.p**self.N

    @property
    def restriction(self) -> int:
        """The exponent on Q(zeta_{p^N}), i.e. s mod p^N."""
        return self.s % self.p**self.N

    def __call__(self, x):
        return self.apply(x)

    def apply(self, x):
        if isinstance(x, (int, Fraction)):
            return x
        if isinstance(x, CyclotomicNumber):
            if x.tower.N > self.N:
                raise ValueError("Galois element defined on a shallower tower than its argument")
            return x.galois(self.s % x.tower.m)
        apply_galois = getattr(x, "galois", None)
        if apply_galois is None:
            raise TypeError(f"cannot apply a Galois element to {type(x).__name__}")
        return apply_galois(self)

    def __mul__(self, other: "GaloisElement") -> "GaloisElement":
        if (other.p, other.N) != (self.p, self.N):
            raise ValueError("Galois elements from different towers")
        return GaloisElement(self.p, self.N, self.s * other.s)

    def inverse(self) -> "GaloisElement":
        return GaloisElement(self.p, self.N, pow(self.s, -1, self.modulus))

    def __pow__(self, k: int) -> "GaloisElement":
        return GaloisElement(self.p, self.N, pow(self.s, k, self.modulus))

    def is_identity(self) -> bool:
        return self.s == 1

    def __eq__(self, other):
        if not isinstance(other, GaloisElement):
            return NotImplemented
        return (self.p, self.N, self.s) == (other.p, other.N, other.s)

    def __hash__(self):
        return hash((self.p, self.N, self.s))

    def __repr__(self):
        return f"sigma_{self.s} (mod {self.modulus})"


def sqrt_table(p: int, N: int = 1) -> dict:
    tw = tower(p, N)
    return {
        "gauss": tw.gauss,
        "sqrt_pstar": tw.sqrt_pstar,
        "sqrt_p": tw.sqrt_p,
        "sqrt_mp": tw.sqrt_mp,
        "sqrt_m1": tw.i,
    }


def _normalize_field(K: str) -> str:
    K = _ALIASES.get(K, K)
    if K not in SUBFIELDS:
        raise ValueError(f"unknown subfield tag {K!r}; expected one of {SUBFIELDS}")
    return K


def _fixes(K: str, s: int, p: int) -> bool:
    if K == Q:
        return True
    if K == Q_SQRT_P:
        chi = legendre(s, p)
        return chi == 1 if p % 4 == 1 else chi * chi4(s) == 1
    if K == K_MAIN:
        return legendre(s, p) == 1 and s % 4 == 1
    return s % p == 1 and s % 4 == 1


@lru_cache(maxsize=None)
def fixing_group(p: int, N: int, K: str) -> tuple:
    """All exponents s mod 4p^N whose sigma_s fixes the subfield K pointwise."""
    K = _normalize_field(K)
    tw = tower(p, N)
    return tuple(s for s in tw.units() if _fixes(K, s, p))


@lru_cache(maxsize=None)
def subgroup_generators(p: int, N: int, K: str) -> tuple:
    """A small generating set of :func:`fixing_group`, chosen greedily."""
    group = fixing_group(p, N, K)
    m = 4 * p**N
    gens = []
    span = {1}
    for s in group:
        if s in span:
            continue
        gens.append(s)
        frontier = list(span)
        while frontier:
            nxt = []
            for a in frontier:
                for g in gens:
                    b = a * g % m
                    if b not in span:
                        span.add(b)
                        nxt.append(b)
            frontier = nxt
        if len(span) == len(group):
            break
    return tuple(gens)


def in_subfield(x: CyclotomicNumber, K: str) -> bool:
    """True iff x lies in the subfield K of Q(zeta_{4p^N})."""
    K = _normalize_field(K)
    if x.is_rational():
        return True
    if K == Q:
        return False
    return all(x.galois(s) == x for s in subgroup_generators(x.p, x.N, K))
