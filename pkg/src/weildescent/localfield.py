"""F = Q_p modelled by exact rationals: valuations, additive characters, measures.

The reference character is lambda_std(x) = zeta_{p^k}^a where x = a/p^k mod Z_p.
It has level 0.  Every other character is a twist lambda_std[t](x) = lambda_std(t x).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .cyclo import CyclotomicNumber, tower
from .errors import TowerTooShallow

__all__ = [
    "valuation",
    "vmin",
    "residue",
    "LocalScalar",
    "AdditiveCharacter",
    "std_character",
    "char_eval",
    "char_exponent",
    "lattice_measure",
    "abs_sqrt",
]

INF = math.inf


def _frac(x) -> Fraction:
    if isinstance(x, LocalScalar):
        return x.value
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    raise TypeError(f"expected a rational, got {type(x).__name__}")


def _vint(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def valuation(x, p: int):
    """p-adic valuation of a rational; +inf for zero."""
    x = _frac(x)
    if x == 0:
        return INF
    return _vint(x.numerator, p) - _vint(x.denominator, p)


def vmin(entries, p: int):
    """Smallest valuation over an iterable (nested lists are flattened)."""
    best = INF
    for e in entries:
        v = vmin(e, p) if isinstance(e, (list, tuple)) else valuation(e, p)
        if v < best:
            best = v
    return best


def residue(x, p: int, k: int) -> int:
    """The integer c in [0, p^k) with x = c mod p^k Z_p, for p-integral x."""
    x = _frac(x)
    mod = p**k
    if k <= 0:
        return 0
    if x.denominator % p == 0:
        raise ValueError(f"{x} is not p-integral for p={p}")
    return x.numerator * pow(x.denominator, -1, mod) % mod


@dataclass(frozen=True)
class LocalScalar:
    """A rational regarded as an element of Q_p."""

    value: Fraction
    p: int

    def __post_init__(self):
        object.__setattr__(self, "value", _frac(self.value))

    @property
    def v(self):
        return valuation(self.value, self.p)

    @property
    def abs_exponent(self):
        """|x| = p ** abs_exponent."""
        return -self.v

    def abs(self) -> Fraction:
        if self.value == 0:
            return Fraction(0)
        return Fraction(self.p) ** (-self.v)

    def __str__(self):
        return str(self.value)

    def to_json(self):
        return str(self.value)


def abs_sqrt(s, p: int, N: int) -> CyclotomicNumber:
    """|s|^{1/2} = p^{-v(s)/2} as an element of E_N."""
    v = valuation(s, p)
    if v == INF:
        raise ValueError("|0|^(1/2) is not invertible")
    return tower(p, N).sqrt_p_power(-v)


def char_exponent(z, p: int, N: int) -> int:
    """The exponent e with lambda_std(z) = zeta_{4p^N}^e."""
    z = _frac(z)
    den = z.denominator
    k = _vint(den, p)
    if k == 0:
        return 0
    if k > N:
        raise TowerTooShallow(k, N)
    pk = p**k
    a = z.numerator * pow(den // pk, -1, pk) % pk
    return a * 4 * p ** (N - k)


@dataclass(frozen=True)
class AdditiveCharacter:
    """lambda_std[t] : x -> lambda_std(t x)."""

    p: int
    t: Fraction = Fraction(1)

    def __post_init__(self):
        t = _frac(self.t)
        if t == 0:
            raise ValueError("the twist of an additive character must be nonzero")
        object.__setattr__(self, "t", t)

    @property
    def level(self) -> int:
        return -valuation(self.t, self.p)

    def twist(self, s) -> "AdditiveCharacter":
        s = _frac(s)
        if s == 0:
            raise ValueError("cannot twist by zero")
        return AdditiveCharacter(self.p, self.t * s)

    def exponent(self, x, N: int) -> int:
        return char_exponent(self.t * _frac(x), self.p, N)

    def __call__(self, x, N: int) -> CyclotomicNumber:
        return char_eval(self, x, N)

    def to_json(self):
        return {"twist": str(self.t)}


def std_character(p: int) -> AdditiveCharacter:
    return AdditiveCharacter(p, Fraction(1))


def char_eval(lam: AdditiveCharacter, x, N: int) -> CyclotomicNumber:
    return tower(lam.p, N).root(lam.exponent(x, N))


def lattice_measure(lam: AdditiveCharacter, k: int, N: int = 1) -> CyclotomicNumber:
    """d_lambda-volume of p^k O, namely p^{(l - 2k)/2} with l the level."""
    return tower(lam.p, N).sqrt_p_power(lam.level - 2 * k)
