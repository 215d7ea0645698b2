"""Symmetries of the Weil representation: similitude twists and Galois twists.

Every check returns a TwistReport.  Operator identities are compared exactly
on probe functions; measure identities are compared as scalars.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .cyclo import GaloisElement, fixing_group, in_subfield, legendre, tower
from .errors import NotInGroup
from .localfield import AdditiveCharacter, abs_sqrt
from .rep import Compose, GaloisConjugate, Operator, Weil, WeilInverse, operators_agree, weil_measure
from .schwartz import SchwartzFunction, cell_atoms, cell_keys
from .sympl import SymplecticElement, bruhat_siegel, conj_fs, g_s

__all__ = [
    "TwistReport",
    "char_galois_partner",
    "op_galois",
    "unit_sqrt",
    "default_probes",
    "frak_g",
    "frak_g_root",
    "identity_suite",
    "dilation_twist",
    "galois_twist",
    "galois_conjugation",
    "g_t_fixed",
    "character_twist_measure",
    "dilation_measure",
    "measure_rationality",
    "galois_transport",
    "SUITES",
]


@dataclass
class TwistReport:
    name: str
    params: dict
    probes: int
    ok: bool
    witness: dict | None = None

    def __post_init__(self):
        if self.ok and self.witness is not None:
            raise ValueError("a passing report carries no witness")
        if not self.ok and self.witness is None:
            self.witness = {}

    def to_json(self):
        out = {"name": self.name, "params": self.params, "probes": self.probes, "pass": self.ok}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def _g_json(g):
    return g.to_json() if isinstance(g, SymplecticElement) else g


def _as_sigma(sigma, p, N) -> GaloisElement:
    if isinstance(sigma, GaloisElement):
        return sigma
    s = int(sigma)
    if s % 2 == 0:
        # an even integer names an exponent on Q(zeta_{p^N}); lift it to fix i
        pn = p**N
        s = next(x for x in range(s % pn, 4 * pn, pn) if x % 4 == 1)
    return GaloisElement(p, N, s)


def char_galois_partner(sigma: GaloisElement, lam: AdditiveCharacter) -> Fraction:
    """s with sigma(lambda(x)) = lambda(s x) at depth <= N: the exponent mod p^N."""
    return Fraction(sigma.s % lam.p**sigma.N)


def op_galois(sigma: GaloisElement, T: Operator, phi: SchwartzFunction) -> SchwartzFunction:
    """(^sigma T)(phi) = sigma(T(sigma^{-1} phi))."""
    return GaloisConjugate(sigma, T).apply(phi)


def unit_sqrt(a: int, p: int, N: int) -> int:
    """The square root of a unit square a mod p^N that is smallest as an integer."""
    a %= p**N
    if a % p == 0 or legendre(a, p) != 1:
        raise NotInGroup(f"{a} is not a unit square modulo {p}^{N}")
    r = next(x for x in range(1, p) if x * x % p == a % p)
    mod = p
    for _ in range(1, N):
        mod *= p
        # Hensel step for x^2 - a
        r = (r - (r * r - a) * pow(2 * r, -1, mod)) % mod
    return min(r, p**N - r)


def default_probes(p, n, cell, N, extra=3, seed=0):
    """All atoms of the cell plus a few seeded random E_N-combinations of them."""
    j, k = cell
    atoms = cell_atoms(p, n, j, k, N)
    rng = random.Random(f"probes:{p}:{n}:{j}:{k}:{N}:{seed}")
    tw = tower(p, N)
    keys = list(cell_keys(p, n, j, k))
    out = list(atoms)
    for _ in range(extra):
        table = {}
        for key in rng.sample(keys, min(3, len(keys))):
            table[key] = tw.root(rng.randrange(tw.m)) * rng.randint(1, 3)
        out.append(SchwartzFunction(p, n, j, k, table, N))
    return out


def _agree(name, params, lhs, rhs, probes):
    res = operators_agree(lhs, rhs, probes)
    return TwistReport(name, params, res.checked if res.ok else res.checked + 1, res.ok, res.witness)


def dilation_twist(lam, g, s, N, probes, mode="composed"):
    """W_lambda(g^{f_s}) = W_{lambda[s]}(g)."""
    s = Fraction(s)
    lhs = Weil(lam, conj_fs(g, s), N, mode)
    rhs = Weil(lam.twist(s), g, N, mode)
    return _agree("dilation_twist", {"g": _g_json(g), "s": str(s)}, lhs, rhs, probes)


def _check_fixes_sqrt_p(sigma, p):
    if sigma.s not in fixing_group(p, sigma.N, "Q(sqrt p)"):
        raise NotInGroup(f"{sigma} does not fix sqrt(p)")


def galois_twist(lam, g, sigma, N, probes, mode="composed"):
    """^sigma W_lambda(g) = W_{lambda[s]}(g) for sigma fixing sqrt(p)."""
    sigma = _as_sigma(sigma, lam.p, N)
    _check_fixes_sqrt_p(sigma, lam.p)
    s = char_galois_partner(sigma, lam)
    lhs = GaloisConjugate(sigma, Weil(lam, g, N, mode))
    rhs = Weil(lam.twist(s), g, N, mode)
    return _agree("galois_twist", {"g": _g_json(g), "sigma": sigma.s, "s": str(s)}, lhs, rhs, probes)


def frak_g(p: int, N: int) -> list:
    """Exponents of the finite-level image of the group of the fundamental identity:
    sigma fixes sqrt(p) and acts on Q(zeta_{p^N}) through a unit square."""
    return sorted(s for s in fixing_group(p, N, "Q(sqrt p)") if legendre(s % p, p) == 1)


def frak_g_root(sigma: GaloisElement, p: int) -> int:
    """For sigma in the group of the fundamental identity, a unit s with sigma = sigma_{s^2} on Q(lambda)."""
    _check_fixes_sqrt_p(sigma, p)
    return unit_sqrt(sigma.s % p**sigma.N, p, sigma.N)


def galois_conjugation(lam, g, sigma, N, probes, mode="composed"):
    """^sigma W(g) = W(g_s)^{-1} W(g) W(g_s) when sigma = sigma_{s^2} on Q(lambda)."""
    sigma = _as_sigma(sigma, lam.p, N)
    s = frak_g_root(sigma, lam.p)
    n = g.n
    lhs = GaloisConjugate(sigma, Weil(lam, g, N, mode))
    gs = g_s(n, s)
    rhs = Compose([WeilInverse(lam, gs, N), Weil(lam, g, N, mode), Weil(lam, gs, N)])
    return _agree("galois_conjugation", {"g": _g_json(g), "sigma": sigma.s, "s": str(s)}, lhs, rhs, probes)


def g_t_fixed(lam, t, sigma, N, probes, n=1):
    """^sigma W(g_t) = W(g_t) for sigma in the fundamental-identity group."""
    sigma = _as_sigma(sigma, lam.p, N)
    frak_g_root(sigma, lam.p)
    W = Weil(lam, g_s(n, Fraction(t)), N)
    return _agree("g_t_fixed", {"t": str(Fraction(t)), "sigma": sigma.s}, GaloisConjugate(sigma, W), W, probes)


def galois_transport(lam, g, sigma, N, probes, mode="composed"):
    """sigma(W_lambda(g) phi) = W_{^sigma lambda}(g)(sigma phi)."""
    sigma = _as_sigma(sigma, lam.p, N)
    _check_fixes_sqrt_p(sigma, lam.p)
    s = char_galois_partner(sigma, lam)
    W = Weil(lam, g, N, mode)
    Ws = Weil(lam.twist(s), g, N, mode)
    for count, phi in enumerate(probes):
        lhs = W.apply(phi).values_galois(sigma)
        rhs = Ws.apply(phi.values_galois(sigma))
        if lhs != rhs:
            wit = {"probe": phi.to_json(), "lhs": lhs.to_json(), "rhs": rhs.to_json()}
            return TwistReport("galois_transport", {"g": _g_json(g), "sigma": sigma.s}, count + 1, False, wit)
    return TwistReport("galois_transport", {"g": _g_json(g), "sigma": sigma.s}, len(probes), True)


def _scalar_report(name, params, lhs, rhs):
    ok = lhs == rhs
    wit = None if ok else {"lhs": lhs.to_json(), "rhs": rhs.to_json()}
    return TwistReport(name, params, 0, ok, wit)


def character_twist_measure(lam, g, s, N):
    """mu_{lambda[s],g} = |s|^{i/2} mu_{lambda,g}, compared on the image of O^n in Y_g."""
    s = Fraction(s)
    dec = bruhat_siegel(g, lam.p)
    mu = weil_measure(lam, dec, N)
    mu_s = weil_measure(lam.twist(s), dec, N)
    rhs = mu.lattice_image_volume() * abs_sqrt(s, lam.p, N) ** dec.i
    return _scalar_report("character_twist_measure", {"g": _g_json(g), "s": str(s)}, mu_s.lattice_image_volume(), rhs)


def dilation_measure(lam, g, s, N):
    """mu_{lambda,g^{f_s}} = |s|^{-i/2} mu_{lambda,g} on Y_g = Y_{g^{f_s}}.

    The two measures come from different Bruhat-Siegel factorizations, so they
    are compared through a basis-free number: the volume of the image of O^n.
    """
    s = Fraction(s)
    p = lam.p
    dec = bruhat_siegel(g, p)
    dec_s = bruhat_siegel(conj_fs(g, s), p)
    lhs = weil_measure(lam, dec_s, N).lattice_image_volume()
    rhs = weil_measure(lam, dec, N).lattice_image_volume() * abs_sqrt(s, p, N) ** (-dec.i)
    return _scalar_report("dilation_measure", {"g": _g_json(g), "s": str(s)}, lhs, rhs)


def measure_rationality(lam, g, N, windows=range(-2, 3)):
    """All measure scalars attached to g lie in Q(sqrt p)."""
    dec = bruhat_siegel(g, lam.p)
    mu = weil_measure(lam, dec, N)
    values = [mu.scalar, mu.lattice_image_volume()] + [mu.coset_volume(K) for K in windows]
    bad = [v for v in values if not in_subfield(v, "Q(sqrt p)")]
    wit = None if not bad else {"value": bad[0].to_json()}
    return TwistReport("measure_rationality", {"g": _g_json(g)}, 0, not bad, wit)


SUITES = {
    "dilation_twist": dilation_twist,
    "galois_twist": galois_twist,
    "galois_conjugation": galois_conjugation,
    "g_t_fixed": g_t_fixed,
    "character_twist_measure": character_twist_measure,
    "dilation_measure": dilation_measure,
    "measure_rationality": measure_rationality,
    "galois_transport": galois_transport,
}


def identity_suite(name, params, probes=None) -> TwistReport:
    """Dispatch one named identity.  params holds lam, N and the identity's own arguments."""
    if name not in SUITES:
        raise ValueError(f"unknown identity {name!r}; choose from {sorted(SUITES)}")
    params = dict(params)
    fn = SUITES[name]
    if name in ("character_twist_measure", "dilation_measure", "measure_rationality"):
        return fn(**params)
    return fn(probes=probes, **params)
