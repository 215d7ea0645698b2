"""The Galois 1-cocycle delta(sigma) = A(sigma) D(sigma) on the group H fixing Q(sqrt p, sqrt -p).

Every sigma in H restricts to Q(zeta_{p^N}) as sigma_{eps^{2i} s^2} with eps the
Teichmuller root, 1 <= i <= (p-1)/2 and s a principal unit.  Then

    D(sigma) = W(g_{eps^i s}),
    A(sigma) = rho_e + (prod_{l<i} eta^l(u)) rho_o,

with eta acting as sigma_{eps^2}, u a solution of the norm equation N(u) = -1,
and rho_e, rho_o the even and odd projectors built from W(iota).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .cyclo import GaloisElement, fixing_group, tower
from .errors import NotInGroup, SearchExhausted
from .localfield import AdditiveCharacter, std_character
from .rep import Compose, GaloisConjugate, Operator, Weil, operators_agree
from .schwartz import SchwartzFunction
from .sympl import g_s, iota
from .twists import TwistReport

__all__ = [
    "SigmaDecomposition",
    "CocycleData",
    "teichmuller_eps",
    "eta_element",
    "sigma_decompose",
    "sigma_compose",
    "norm_solve",
    "norm_of",
    "cocycle_data",
    "transversal",
    "Delta",
    "build_delta",
    "build_A",
    "build_D",
    "cocycle_check",
    "delta_fixed_check",
]


def _primitive_root(p: int) -> int:
    phi = p - 1
    factors = {q for q in range(2, phi + 1) if phi % q == 0 and all(q % r for r in range(2, q))}
    return next(g for g in range(2, p) if all(pow(g, phi // q, p) != 1 for q in factors))


@lru_cache(maxsize=None)
def teichmuller_eps(p: int, N: int) -> int:
    """The (p-1)-st root of unity mod p^N lifting the least primitive root mod p."""
    mod = p**N
    a = _primitive_root(p) % mod
    while True:
        b = pow(a, p, mod)
        if b == a:
            return a
        a = b


def _crt_mod4(a: int, p: int, N: int) -> int:
    """The exponent mod 4p^N that is a mod p^N and 1 mod 4."""
    pn = p**N
    m = 4 * pn
    return next(x for x in range(a % pn, m, pn) if x % 4 == 1)


@lru_cache(maxsize=None)
def eta_element(p: int, N: int) -> GaloisElement:
    """eta: acts as sigma_{eps^2} on Q(zeta_{p^N}) and fixes i."""
    eps = teichmuller_eps(p, N)
    return GaloisElement(p, N, _crt_mod4(eps * eps, p, N))


@dataclass(frozen=True)
class SigmaDecomposition:
    i: int
    s: int
    p: int
    N: int

    @property
    def r(self) -> int:
        """eps^i s mod p^N, the parameter of D(sigma)."""
        mod = self.p**self.N
        return pow(teichmuller_eps(self.p, self.N), self.i, mod) * self.s % mod

    def exponent(self) -> int:
        mod = self.p**self.N
        return pow(teichmuller_eps(self.p, self.N), 2 * self.i, mod) * self.s * self.s % mod

    def to_json(self):
        return {"i": self.i, "s": str(self.s)}


def _in_h(s: int, p: int, N: int) -> bool:
    return s in fixing_group(p, N, "K")


def sigma_decompose(sigma, p: int, N: int) -> SigmaDecomposition:
    """The unique (i, s) with sigma = sigma_{eps^{2i} s^2} on Q(zeta_{p^N}).

    A plain integer is read as the exponent on Q(zeta_{p^N}); elements of H fix i,
    so that exponent determines sigma.
    """
    if isinstance(sigma, GaloisElement):
        s_exp = sigma.s
    else:
        s_exp = _crt_mod4(int(sigma), p, N)
    if not _in_h(s_exp, p, N):
        raise NotInGroup(f"sigma_{s_exp} does not fix Q(sqrt p, sqrt -p)")
    mod = p**N
    half = (p - 1) // 2
    a = s_exp % mod
    eps = teichmuller_eps(p, N)
    e2 = eps * eps % p
    # discrete log of a mod p in base eps^2, shifted into [1, half]
    i = next(i for i in range(1, half + 1) if pow(e2, i, p) == a % p)
    sq = a * pow(eps, -2 * i, mod) % mod  # in U_1
    if N == 1:
        s = 1
    else:
        order = p ** (N - 1)
        s = pow(sq, pow(2, -1, order), mod)
    dec = SigmaDecomposition(i, s, p, N)
    assert dec.exponent() == a
    return dec


def sigma_compose(d1: SigmaDecomposition, d2: SigmaDecomposition):
    """The decomposition of sigma tau and whether the index wrapped past (p-1)/2."""
    half = (d1.p - 1) // 2
    k = d1.i + d2.i
    wrapped = k > half
    if wrapped:
        k -= half
    s = d1.s * d2.s % d1.p**d1.N
    return SigmaDecomposition(k, s, d1.p, d1.N), wrapped


# -- the norm equation ---------------------------------------------------------------------


def norm_of(u, p: int):
    """prod_{l < (p-1)/2} eta^l(u), computed in the tower of u."""
    N = u.tower.N
    eta = eta_element(p, N)
    out = u
    cur = u
    for _ in range((p - 1) // 2 - 1):
        cur = eta(cur)
        out = out * cur
    return out


def _search_candidates(p: int, bound: int):
    """Deterministic products i^a (1+i)^g prod_c (1 - zeta_p^c)^e (1 - i zeta_p^c)^f (1 + i zeta_p^c)^h.

    The norm only sees a generator's eta-orbit, and the orbits of c are the
    residues and the non-residues, so c runs over {1, nr}.  Powers of zeta_p
    have norm 1 and are left out.  Products of the (1 - zeta_p^c) alone have
    totally positive norm, which is why the factors involving i are needed.
    """
    tw = tower(p, 1)
    nr = next(c for c in range(2, p) if pow(c, (p - 1) // 2, p) == p - 1)
    gens = []
    for c in (1, nr):
        gens.append(tw.one - tw.zeta(p, c))
        gens.append(tw.one - tw.i * tw.zeta(p, c))
        gens.append(tw.one + tw.i * tw.zeta(p, c))
    gens.append(tw.one + tw.i)
    rng = range(-bound, bound + 1)
    for exps in itertools.product(rng, repeat=len(gens)):
        x = tw.one
        for gen, e in zip(gens, exps):
            if e:
                x = x * gen**e
        for a in range(4):
            yield (a, exps), tw.i**a * x


@lru_cache(maxsize=None)
def norm_solve(p: int, N: int = 1, bound: int = 1):
    """u in Q(zeta_p, i) with N(u) = -1, lifted to E_N."""
    tw = tower(p, N)
    if p % 4 == 3:
        return -tw.one
    if p % 8 == 5:
        return tw.i
    for _, u in _search_candidates(p, bound):
        if norm_of(u, p) == -tower(p, 1).one:
            return u.lift(N)
    raise SearchExhausted(f"no solution of N(u) = -1 with exponents in [-{bound}, {bound}] for p={p}", bound)


# -- cocycle data -----------------------------------------------------------------------


class CocycleData:
    """u, eta and the cached products P_k = prod_{l<k} eta^l(u), 1 <= k <= (p-1)/2."""

    def __init__(self, p: int, N: int, lam: AdditiveCharacter | None = None):
        self.p = p
        self.N = N
        self.lam = lam or std_character(p)
        self.half = (p - 1) // 2
        self.eps = teichmuller_eps(p, N)
        self.eta = eta_element(p, N)
        self.u = norm_solve(p, N)
        prods = [tower(p, N).one]
        cur = self.u
        for _ in range(self.half):
            prods.append(prods[-1] * cur)
            cur = self.eta(cur)
        self.products = prods
        if prods[self.half] != -tower(p, N).one:
            raise ArithmeticError("norm of u is not -1")
        self.W_iota = Weil(self.lam, iota(1), N)
        self._n_cache = {}

    def product(self, k: int):
        return self.products[k]

    def w_iota(self, n):
        if n == 1:
            return self.W_iota
        hit = self._n_cache.get(n)
        if hit is None:
            hit = self._n_cache[n] = Weil(self.lam, iota(n), self.N)
        return hit

    def to_json(self):
        return {"p": self.p, "N": self.N, "eps": self.eps, "eta": self.eta.s, "u": self.u.to_json()}


@lru_cache(maxsize=None)
def cocycle_data(p: int, N: int) -> CocycleData:
    return CocycleData(p, N)


@lru_cache(maxsize=None)
def transversal(p: int, N: int):
    """All of H_N = Gal(E_N / Q(sqrt p, sqrt -p)), ordered by (i, s)."""
    elems = [GaloisElement(p, N, s) for s in fixing_group(p, N, "K")]
    return tuple(sorted(elems, key=lambda g: (lambda d: (d.i, d.s))(sigma_decompose(g, p, N))))


# -- operators ------------------------------------------------------------------------------


class _EvenOdd(Operator):
    """c_e rho_e + c_o rho_o = ((c_e + c_o)/2) I + ((c_e - c_o)/2) W(iota)."""

    def __init__(self, data: CocycleData, c_even, c_odd, n=1):
        self.data = data
        self.c_even = c_even
        self.c_odd = c_odd
        self.n = n

    def apply(self, phi):
        half = Fraction(1, 2)
        a = (self.c_even + self.c_odd) * half
        b = (self.c_even - self.c_odd) * half
        refl = self.data.w_iota(phi.n).apply(phi)
        return phi.scale(a) + refl.scale(b)

    def describe(self):
        return {"op": "even_odd", "even": _cj(self.c_even), "odd": _cj(self.c_odd)}


def _cj(c):
    return c.to_json() if hasattr(c, "to_json") else str(c)


def build_A(data: CocycleData, k: int, n=1) -> Operator:
    """rho_e + P_k rho_o."""
    return _EvenOdd(data, tower(data.p, data.N).one, data.product(k), n)


def build_D(data: CocycleData, dec: SigmaDecomposition, n=1, r=None) -> Operator:
    """W(g_{eps^i s}); r overrides the rational representative."""
    r = dec.r if r is None else r
    return Weil(data.lam, g_s(n, Fraction(r)), data.N)


class Delta(Operator):
    """delta(sigma) = A(sigma) D(sigma), or its inverse D^{-1} A^{-1}."""

    def __init__(self, data: CocycleData, sigma: GaloisElement, n=1, inverse=False, r=None):
        self.data = data
        self.sigma = sigma
        self.n = n
        self.dec = sigma_decompose(sigma, data.p, data.N)
        self.inverse = inverse
        rr = self.dec.r if r is None else r
        coeff = data.product(self.dec.i)
        if inverse:
            self.A = _EvenOdd(data, tower(data.p, data.N).one, coeff.inverse(), n)
            self.D = build_D(data, self.dec, n, r=Fraction(1) / Fraction(rr))
        else:
            self.A = _EvenOdd(data, tower(data.p, data.N).one, coeff, n)
            self.D = build_D(data, self.dec, n, r=rr)

    @property
    def A_coeff(self):
        return self.data.product(self.dec.i)

    def apply(self, phi):
        if self.inverse:
            return self.D.apply(self.A.apply(phi))
        return self.A.apply(self.D.apply(phi))

    def describe(self):
        return {
            "op": "delta_inv" if self.inverse else "delta",
            "i": self.dec.i,
            "s": str(self.dec.s),
            "A_coeff": self.A_coeff.to_json(),
        }

    def to_json(self):
        return {"i": self.dec.i, "s": str(self.dec.s), "A_coeff": self.A_coeff.to_json()}


def build_delta(sigma, p=None, N=None, n=1, data=None) -> Delta:
    if data is None:
        if isinstance(sigma, GaloisElement):
            p, N = sigma.p, sigma.N
        data = cocycle_data(p, N)
    if not isinstance(sigma, GaloisElement):
        sigma = GaloisElement(data.p, data.N, sigma)
    return Delta(data, sigma, n)


# -- checks --------------------------------------------------------------------------------


def _report(name, params, res):
    return TwistReport(name, params, res.checked, res.ok, res.witness)


def cocycle_check(sigma, tau, probes, gs=(), data=None):
    """The D- and A-defects, the cocycle law, and delta(sigma)^{-1} W(g) delta(sigma) = ^sigma W(g).

    Returns a list of reports; the defect reports record which regime applied.
    """
    data = data or cocycle_data(sigma.p, sigma.N)
    n = probes[0].n if probes else 1
    ds = sigma_decompose(sigma, data.p, data.N)
    dt = sigma_decompose(tau, data.p, data.N)
    st = sigma * tau
    dst, wrapped = sigma_compose(ds, dt)
    assert sigma_decompose(st, data.p, data.N) == dst
    params = {"sigma": sigma.s, "tau": tau.s, "wrapped": wrapped}
    W_iota = data.w_iota(n)
    reports = []

    D_s, D_t, D_st = (build_D(data, d, n) for d in (ds, dt, dst))
    lhs = Compose([D_s, GaloisConjugate(sigma, D_t)])
    rhs = Compose([W_iota, D_st]) if wrapped else D_st
    reports.append(_report("cocycle.D-defect", params, operators_agree(lhs, rhs, probes)))

    A_s, A_t, A_st = (build_A(data, d.i, n) for d in (ds, dt, dst))
    lhs = Compose([A_s, GaloisConjugate(sigma, A_t)])
    rhs = Compose([A_st, W_iota]) if wrapped else A_st
    reports.append(_report("cocycle.A-defect", params, operators_agree(lhs, rhs, probes)))

    d_s = Delta(data, sigma, n)
    lhs = Compose([d_s, GaloisConjugate(sigma, Delta(data, tau, n))])
    reports.append(_report("cocycle.law", params, operators_agree(lhs, Delta(data, st, n), probes)))

    for g in gs:
        W = Weil(data.lam, g, data.N)
        lhs = Compose([Delta(data, sigma, n, inverse=True), W, d_s])
        res = operators_agree(lhs, GaloisConjugate(sigma, W), probes)
        reports.append(_report("cocycle.conjugation", {"sigma": sigma.s, "g": g.to_json()}, res))
    return reports


def delta_fixed_bound(phi: SchwartzFunction) -> int:
    """M with delta(sigma) phi = phi whenever i = (p-1)/2 and s = 1 mod p^M."""
    return phi.k - phi.j


def delta_fixed_check(phi: SchwartzFunction, data=None):
    """delta(sigma) phi = phi exactly when i = (p-1)/2 and s = 1 mod p^M, over the transversal.

    For atoms the bound is sharp, so the converse is checked as well.
    """
    data = data or cocycle_data(phi.p, phi.N)
    M = delta_fixed_bound(phi)
    is_atom = len(phi.table) == 1
    checked = 0
    for sigma in transversal(data.p, data.N):
        dec = sigma_decompose(sigma, data.p, data.N)
        if dec.i != data.half:
            continue
        checked += 1
        fixed = Delta(data, sigma, phi.n).apply(phi) == phi
        predicted = (dec.s - 1) % data.p**min(M, data.N) == 0
        if (predicted and not fixed) or (is_atom and fixed != predicted):
            wit = {"probe": phi.to_json(), "s": str(dec.s), "M": M, "fixed": fixed}
            return TwistReport("delta_fixed", {"M": M}, checked, False, wit)
    return TwistReport("delta_fixed", {"M": M}, checked, True)
