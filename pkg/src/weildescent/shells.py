"""Exact inversion of operators built from unit dilations, orbit by orbit.

An operator of the form B = sum_t beta_t D_t with (D_t phi)(x) = phi(t x), t a
p-adic unit, preserves every cell.  On one orbit of the unit group acting on
the atoms of a cell, B is an element of the group ring E[Z/n] of a cyclic
group.  Linear systems B x = b are solved there by a multimodular method:
reduce modulo primes l = 1 mod lcm(m, n), evaluate at the m-th roots of unity,
diagonalize the group ring by a discrete Fourier transform, recombine by CRT
and rational reconstruction.  Every answer is then verified exactly by one
Kronecker-packed polynomial product, so the modular step is never trusted.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gcd, isqrt

import numpy as np
from flint import fmpq, fmpq_poly, fmpz_poly, nmod_mat

from .cyclo import CyclotomicNumber, is_prime, tower
from .errors import SingularOperator
from .rep import Operator
from .schwartz import SchwartzFunction, cell_keys

__all__ = ["Orbit", "orbits", "DilationInverse", "solve_group_ring", "group_ring_apply", "group_ring_invertible"]

_PRIME_BITS = 21
_CHUNK = 2048  # (2^21)^2 * 2048 < 2^53, so float64 dot products stay exact


def _prime_factors(n):
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


@lru_cache(maxsize=None)
def unit_generator(p: int) -> int:
    """A generator of (Z/p^w)^* for every w: a primitive root mod p^2."""
    phi = p * (p - 1)
    qs = _prime_factors(phi)
    return next(g for g in range(2, p * p) if g % p and all(pow(g, phi // q, p * p) != 1 for q in qs))


# -- orbits ------------------------------------------------------------------------------


@dataclass(frozen=True)
class Orbit:
    """Keys g^a c_0 for a = 0..size-1, listed in that order."""

    keys: tuple

    @property
    def size(self):
        return len(self.keys)


@lru_cache(maxsize=None)
def orbits(p: int, n: int, j: int, k: int) -> tuple:
    w = k - j
    mod = p**w
    g = unit_generator(p) % mod if w else 0
    seen = set()
    out = []
    for key in cell_keys(p, n, j, k):
        if key in seen:
            continue
        members = [key]
        seen.add(key)
        cur = key
        while True:
            cur = tuple(c * g % mod for c in cur)
            if cur == key:
                break
            members.append(cur)
            seen.add(cur)
        out.append(Orbit(tuple(members)))
    return tuple(out)


# -- modular helpers ------------------------------------------------------------------------


def _primes_1_mod(L: int):
    """Primes l = 1 mod L below 2^_PRIME_BITS, largest first."""
    top = (2**_PRIME_BITS - 1) // L * L + 1
    for cand in range(top, 2, -L):
        if is_prime(cand):
            yield cand


def _root_of_order(order: int, l: int) -> int:
    qs = _prime_factors(order)
    cof = (l - 1) // order
    for a in range(2, l):
        r = pow(a, cof, l)
        if all(pow(r, order // q, l) != 1 for q in qs):
            return r
    raise ArithmeticError(f"no root of order {order} mod {l}")


def matmod(A, B, l):
    """A @ B mod l for int64 arrays with entries in [0, l)."""
    K = A.shape[1]
    out = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
    Af = A.astype(np.float64)
    Bf = B.astype(np.float64)
    for s in range(0, K, _CHUNK):
        part = Af[:, s : s + _CHUNK] @ Bf[s : s + _CHUNK]
        out = (out + np.fmod(part, l).astype(np.int64)) % l
    return out


def _powmod(x, e, l):
    x = x % l
    result = np.ones_like(x)
    while e:
        if e & 1:
            result = result * x % l
        x = x * x % l
        e >>= 1
    return result


@lru_cache(maxsize=64)
def _embedding(l: int, p: int, N: int):
    """Vandermonde matrix of the primitive m-th roots mod l and its inverse."""
    tw = tower(p, N)
    z = _root_of_order(tw.m, l)
    ks = [k for k in range(tw.m) if gcd(k, tw.m) == 1]
    roots = np.array([pow(z, k, l) for k in ks], dtype=np.int64)
    V = np.empty((tw.degree, tw.degree), dtype=np.int64)
    V[0] = 1
    for e in range(1, tw.degree):
        V[e] = V[e - 1] * roots % l
    Vinv = nmod_mat(V.tolist(), l).inv()
    return V, np.array([[int(x) for x in row] for row in Vinv.tolist()], dtype=np.int64)


@lru_cache(maxsize=256)
def _dft(l: int, n: int):
    w = _root_of_order(n, l) if n > 1 else 1
    a = np.arange(n)
    expo = np.outer(a, a) % n
    pw = np.array([pow(w, e, l) for e in range(n)], dtype=np.int64)
    pw_inv = np.array([pow(w, -e % n, l) for e in range(n)], dtype=np.int64)
    return pw[expo], pw_inv[expo]


def _integer_rows(values, D):
    """(numerator matrix, common denominator) of the power-basis coefficients."""
    den = 1
    coeffs = []
    for v in values:
        cs = v._poly.coeffs()
        coeffs.append(cs)
        for c in cs:
            q = int(c.q)
            den = den * q // gcd(den, q)
    rows = []
    for cs in coeffs:
        row = [int(c.p) * (den // int(c.q)) for c in cs]
        rows.append(row + [0] * (D - len(row)))
    return rows, den


def _reduce(rows, l):
    if not isinstance(rows, np.ndarray):
        rows = np.array(rows, dtype=object).reshape(len(rows), -1)
    return (rows % l).astype(np.int64)


def _ratrecon(a: int, M: int):
    """r/s = a mod M with |r|, s <= sqrt(M/2), or None."""
    bound = isqrt(M // 2)
    r0, r1 = M, a % M
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound:
        return None
    if s1 < 0:
        r1, s1 = -r1, -s1
    if gcd(r1, s1) != 1:
        return None
    return fmpq(r1, s1)


def _reconstruct(residues: np.ndarray, primes: list):
    """Rational reconstruction of every entry of the CRT combination, or None."""
    M = 1
    for l in primes:
        M *= l
    flat = residues.reshape(len(primes), -1)
    nz = np.nonzero(flat.any(axis=0))[0]
    out = {}
    # mixed-radix (Garner) digits are small ints, CRT values come from them
    consts = []
    for i, l in enumerate(primes):
        prods, acc = [], 1
        for l2 in primes[:i]:
            prods.append(acc % l)
            acc = acc * l2
        consts.append((prods, pow(acc % l, -1, l) if i else 1))
    digits = []
    for i, l in enumerate(primes):
        prods, inv = consts[i]
        partial = np.zeros(len(nz), dtype=np.int64)
        for d, c in zip(digits, prods):
            partial = (partial + d * c) % l
        digits.append((flat[i, nz] - partial) % l * inv % l)
    half = M // 2
    den = 1
    bound = isqrt(M // 2)
    for t, idx in enumerate(nz.tolist()):
        val, scale = 0, 1
        for d, l in zip(digits, primes):
            val += int(d[t]) * scale
            scale *= l
        # try the running denominator first
        num = val * den % M
        if num > half:
            num -= M
        if abs(num) <= bound and den <= bound:
            out[idx] = fmpq(num, den)
            continue
        q = _ratrecon(val, M)
        if q is None:
            return None
        den = den * int(q.q) // gcd(den, int(q.q))
        out[idx] = q
    return out


# -- group ring ------------------------------------------------------------------------------


def _packed_product(brows, xrows, tw):
    """Integer group-ring product of coefficient rows, each output reduced mod Phi_m.

    One product of Kronecker-packed polynomials: y^c -> t^(cS), S = 2D - 1.
    """
    n = len(brows)
    D = tw.degree
    S = 2 * D - 1
    pb = [0] * (n * S)
    for c, row in enumerate(brows):
        base = ((n - c) % n) * S
        pb[base : base + D] = row
    px = [0] * (n * S)
    for a, row in enumerate(xrows):
        px[a * S : a * S + D] = row
    prod = [int(c) for c in (fmpz_poly(pb) * fmpz_poly(px)).coeffs()]
    prod += [0] * ((2 * n - 1) * S - len(prod))
    modulus = _int_modulus(tw.p, tw.N)
    out = []
    for a in range(n):
        acc = prod[a * S : (a + 1) * S]
        if a + n < 2 * n - 1:
            acc = [u + v for u, v in zip(acc, prod[(a + n) * S : (a + n + 1) * S])]
        out.append(fmpz_poly(acc) % modulus)
    return out


@lru_cache(maxsize=None)
def _int_modulus(p, N):
    return fmpz_poly([int(c) for c in tower(p, N).modulus.coeffs()])


def group_ring_apply(beta, x, tw):
    """(beta * x)[a] = sum_c beta[c] x[a + c] over Z/n, exactly."""
    D = tw.degree
    brows, bden = _integer_rows(beta, D)
    xrows, xden = _integer_rows(x, D)
    scale = fmpq(1, bden * xden)
    return [CyclotomicNumber(tw, fmpq_poly(v) * scale, _reduced=True) for v in _packed_product(brows, xrows, tw)]


def _verify(brows, bden, x, b, tw):
    """beta * x == b exactly, with beta = brows / bden."""
    D = tw.degree
    xrows, xden = _integer_rows(x, D)
    bnum, bd = _integer_rows(b, D)
    lhs = _packed_product(brows, xrows, tw)
    k1, k2 = bd, bden * xden
    return all(u * k1 == fmpz_poly(v) * k2 for u, v in zip(lhs, bnum))


def _modular_solve(beta_rows, rhs_rows, n, r, D, p, N, l):
    """Residues of beta^{-1} b at one prime, or None if beta is singular there."""
    V, Vinv = _embedding(l, p, N)
    Fp, Fm = _dft(l, n)
    bt = matmod(_reduce(beta_rows, l), V, l)  # (n, D) values at the embeddings
    xt = matmod(_reduce(rhs_rows, l), V, l)  # (r n, D): rows ordered (rhs, a)
    check = matmod(Fm, bt, l)  # beta-check(k) = sum_c beta[c] w^{-ck}
    if not check.all():
        return None
    bh = matmod(Fp, xt.reshape(r, n, D).transpose(1, 0, 2).reshape(n, r * D), l)
    inv = _powmod(check, l - 2, l)
    xh = bh.reshape(n, r, D) * inv[:, None, :] % l
    ninv = pow(n, -1, l)
    xv = matmod(Fm, xh.reshape(n, r * D), l) * ninv % l
    xv = xv.reshape(n, r, D).transpose(1, 0, 2).reshape(r * n, D)
    return matmod(xv, Vinv, l)


def _nonsingular_at(beta_rows, n, D, p, N, l):
    V, _ = _embedding(l, p, N)
    _, Fm = _dft(l, n)
    check = matmod(Fm, matmod(_reduce(beta_rows, l), V, l), l)
    # one embedding with every character nonzero certifies det != 0 in E_N
    return bool(check.all(axis=0).any())


def _lcm(a, b):
    return a * b // gcd(a, b)


def group_ring_invertible(beta, tw, attempts=3) -> bool:
    """True if beta is a unit of E_N[Z/n], certified at one prime; False after `attempts` failing primes."""
    n = len(beta)
    rows, _ = _integer_rows(beta, tw.degree)
    for count, l in enumerate(_primes_1_mod(_lcm(tw.m, n))):
        if count >= attempts:
            return False
        if _nonsingular_at(rows, n, tw.degree, tw.p, tw.N, l):
            return True
    return False


def solve_group_ring(beta, rhs, tw, max_primes=4096):
    """Exact x with beta * x = b for each b in rhs (lists of CyclotomicNumber over Z/n)."""
    n = len(beta)
    r = len(rhs)
    D = tw.degree
    if r == 0:
        return []
    brows, bden = _integer_rows(beta, D)
    flat = [v for b in rhs for v in b]
    xrows, xden = _integer_rows(flat, D)
    bobj = np.array(brows, dtype=object).reshape(n, D)
    xobj = np.array(xrows, dtype=object).reshape(n * r, D)
    primes, residues = [], []
    skipped = 0
    target = 2
    for l in _primes_1_mod(_lcm(tw.m, n)):
        if len(primes) >= max_primes:
            break
        res = _modular_solve(bobj, xobj, n, r, D, tw.p, tw.N, l)
        if res is None:
            skipped += 1
            if skipped >= 3 and not primes:
                raise SingularOperator("group-ring element is singular modulo three primes")
            continue
        primes.append(l)
        residues.append(res)
        if len(primes) < target:
            continue
        target *= 2
        rec = _reconstruct(np.stack(residues), primes)
        if rec is None:
            continue
        sols = _assemble(rec, n, r, D, tw, fmpq(bden, xden))
        if all(_verify(brows, bden, x, b, tw) for x, b in zip(sols, rhs)):
            return sols
    raise ArithmeticError(f"no verified solution with {len(primes)} primes")


def _assemble(rec, n, r, D, tw, scale):
    cols = [[[fmpq(0)] * D for _ in range(n)] for _ in range(r)]
    for idx, q in rec.items():
        row, e = divmod(idx, D)
        rr, a = divmod(row, n)
        cols[rr][a][e] = q * scale
    return [[CyclotomicNumber(tw, fmpq_poly(c), _reduced=True) for c in col] for col in cols]


# -- operators ------------------------------------------------------------------------------------


class DilationInverse(Operator):
    """Applies op^{-1} for an operator op in the span of the unit dilations.

    For each cell the group-ring coefficients of op on every orbit are read off
    from op applied to the orbit's base atom; the dilation structure is checked
    on every other atom of the orbit before it is used.
    """

    def __init__(self, op, p: int, N: int, n: int = 1, max_keys=4096):
        self.op = op
        self.p = p
        self.N = N
        self.n = n
        self.max_keys = max_keys
        self._cells = {}
        self._memo = {}

    def structure(self, j, k, N):
        """Per orbit: (orbit, beta).  Raises SingularOperator if op is not invertible."""
        hit = self._cells.get((j, k, N))
        if hit is not None:
            return hit
        p, n = self.p, self.n
        if p ** (n * (k - j)) > self.max_keys:
            raise SingularOperator(f"cell ({j},{k}) exceeds {self.max_keys} atoms", cell=(j, k))
        tw = tower(p, N)
        one = tw.one
        out = []
        for orb in orbits(p, n, j, k):
            index = {key: a for a, key in enumerate(orb.keys)}
            size = orb.size
            beta = None
            for a, key in enumerate(orb.keys):
                img = self.op.apply(SchwartzFunction(p, n, j, k, {key: one}, N))
                if img.is_zero():
                    raise SingularOperator("operator kills an atom", cell=(j, k))
                if img.j < j or img.k > k:
                    raise SingularOperator("operator does not preserve the cell", cell=(j, k))
                col = img.lift(N).table_at(j, k)
                if any(key2 not in index for key2 in col):
                    raise SingularOperator("operator mixes orbits of the unit group", cell=(j, k))
                # (op e_a)[b] = beta[a - b]
                cand = [tw.zero] * size
                for key2, v in col.items():
                    cand[(a - index[key2]) % size] = v
                if beta is None:
                    beta = cand
                elif cand != beta:
                    raise SingularOperator("operator does not commute with unit dilations", cell=(j, k))
            if not group_ring_invertible(beta, tw):
                raise SingularOperator("operator is singular on the cell", cell=(j, k))
            out.append((orb, beta))
        self._cells[(j, k, N)] = out
        return out

    def apply(self, phi):
        return self.apply_many([phi])[0]

    def describe(self):
        return {"op": "inverse", "of": self.op.describe()}

    def apply_many(self, phis):
        """op^{-1} phi for each phi, solving all right-hand sides on a cell together."""
        results = [None] * len(phis)
        groups = {}
        for t, phi in enumerate(phis):
            if phi.is_zero():
                results[t] = phi
                continue
            phi = phi.lift(max(self.N, phi.N))
            hit = self._memo.get(phi)
            if hit is not None:
                results[t] = hit
                continue
            groups.setdefault((phi.j, phi.k, phi.N), []).append((t, phi))
        for (j, k, N), members in groups.items():
            tw = tower(self.p, N)
            tables = [{} for _ in members]
            for orb, beta in self.structure(j, k, N):
                rhs, where = [], []
                for s, (_, phi) in enumerate(members):
                    b = [phi.table.get(key, tw.zero) for key in orb.keys]
                    if any(not v.is_zero() for v in b):
                        rhs.append(b)
                        where.append(s)
                if not rhs:
                    continue
                for s, x in zip(where, solve_group_ring(beta, rhs, tw)):
                    for key, v in zip(orb.keys, x):
                        if not v.is_zero():
                            tables[s][key] = v
            for (t, phi), table in zip(members, tables):
                results[t] = SchwartzFunction(self.p, self.n, j, k, table, N)
                self._memo[phi] = results[t]
        return results
