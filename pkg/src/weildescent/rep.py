"""Schrodinger and Weil operators on Bruhat-Schwartz functions, evaluated exactly.

Operators are lazy: each one knows how to map a SchwartzFunction to a new one.
Integrals become finite sums over cosets of a lattice; the window (J, K) of each
sum is derived from valuations of the matrix blocks and the input cell.

Weil operators use Rao's normalization.  For g = p1 tau_i p2 the measure on
Y_g is |det(d1 d2)|^{-1/2} times the pullback of the self-dual product measure
on span(y_1..y_i) along y -> (y d1)[:i].
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .cyclo import CyclotomicNumber, GaloisElement, tower
from .errors import CellOverflow, InconsistentMultiplier, SingularOperator, TowerTooShallow
from .localfield import AdditiveCharacter, char_exponent, residue, valuation, vmin
from .schwartz import SchwartzFunction, atom, cell_keys
from .sympl import (
    HeisenbergElement,
    SiegelDecomposition,
    SymplecticElement,
    bruhat_siegel,
    mat_det,
    mat_inv,
    mat_mul,
    pairing,
    tau,
    transpose,
)

__all__ = [
    "Operator",
    "Identity",
    "Scalar",
    "Compose",
    "LinearCombination",
    "Schrodinger",
    "Weil",
    "WeilInverse",
    "GaloisConjugate",
    "CellInverse",
    "MeasureData",
    "weil_measure",
    "projective_multiplier",
    "intertwine_check",
    "operators_agree",
    "DEFAULT_MAX_KEYS",
]

DEFAULT_MAX_KEYS = 1 << 16
INF = math.inf


def _ceil_half(x):
    return -((-x) // 2)


def _dot(u, v):
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def _vecmat(v, m):
    if not m:
        return ()
    return tuple(sum((v[r] * m[r][c] for r in range(len(v))), Fraction(0)) for c in range(len(m[0])))


def _quad(x, S):
    """x S x^T for a row vector x."""
    return _dot(_vecmat(x, S), x)


def _max_finite(*vals):
    vals = [v for v in vals if v != -INF]
    return max(vals)


def _check_size(p, n, j, k, limit):
    size = p ** ((k - j) * n)
    if size > limit:
        raise CellOverflow(f"cell ({j},{k}) in dimension {n} has {size} cosets, limit is {limit}")


def _lookup(phi: SchwartzFunction, u):
    """phi(u) as a CyclotomicNumber, or None when zero."""
    key = phi.key_of(u)
    if key is None:
        return None
    return phi.table.get(key)


def _accumulate(tw, counts, scale=None):
    """sum_v v * (sum_e cnt zeta^e) for counts {value_key: (value, {e: cnt})}."""
    total = None
    for value, exps in counts.values():
        term = tw.from_exponents(exps) * value
        total = term if total is None else total + term
    if total is None:
        return None
    if scale is not None:
        total = total * scale
    return total


class Operator:
    """A linear operator on S(F^n, E_N), applied lazily."""

    n: int = 1

    def apply(self, phi: SchwartzFunction) -> SchwartzFunction:
        raise NotImplementedError

    def __call__(self, phi):
        return self.apply(phi)

    def __mul__(self, other):
        if isinstance(other, Operator):
            return Compose([self, other])
        if isinstance(other, (int, Fraction, CyclotomicNumber)):
            return Compose([Scalar(other, self.n), self])
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, CyclotomicNumber)):
            return Compose([Scalar(other, self.n), self])
        return NotImplemented

    def __add__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        return LinearCombination([(1, self), (1, other)])

    def __sub__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        return LinearCombination([(1, self), (-1, other)])
        return LinearCombination([(1, self), (-1, other)])

    def galois(self, sigma) -> "GaloisConjugate":
        return GaloisConjugate(sigma, self)

    def describe(self) -> dict:
        return {"op": type(self).__name__}


class Identity(Operator):
    def __init__(self, n=1):
        self.n = n

    def apply(self, phi):
        return phi

    def describe(self):
        return {"op": "id"}


class Scalar(Operator):
    def __init__(self, c, n=1):
        self.c = c
        self.n = n

    def apply(self, phi):
        return phi.scale(self.c)

    def describe(self):
        c = self.c
        return {"op": "scalar", "c": c.to_json() if isinstance(c, CyclotomicNumber) else str(c)}


class Compose(Operator):
    """Product T_1 T_2 ... T_r, applied right to left."""

    def __init__(self, ops):
        flat = []
        for op in ops:
            flat.extend(op.ops if isinstance(op, Compose) else [op])
        self.ops = flat
        self.n = flat[0].n if flat else 1

    def apply(self, phi):
        for op in reversed(self.ops):
            phi = op.apply(phi)
        return phi

    def describe(self):
        return {"op": "compose", "factors": [op.describe() for op in self.ops]}


class LinearCombination(Operator):
    """sum_k c_k T_k with coefficients in E_N."""

    def __init__(self, terms):
        self.terms = [(c, op) for c, op in terms]
        self.n = self.terms[0][1].n if self.terms else 1

    def apply(self, phi):
        out = SchwartzFunction.zero(phi.p, phi.n, phi.N)
        for c, op in self.terms:
            if isinstance(c, CyclotomicNumber):
                if c.is_zero():
                    continue
            elif c == 0:
                continue
            out = out + op.apply(phi).scale(c)
        return out

    def describe(self):
        terms = []
        for c, op in self.terms:
            cj = c.to_json() if isinstance(c, CyclotomicNumber) else str(c)
            terms.append({"coeff": cj, "op": op.describe()})
        return {"op": "sum", "terms": terms}


class GaloisConjugate(Operator):
    """^sigma T : phi -> sigma(T(sigma^{-1} phi))."""

    def __init__(self, sigma: GaloisElement, op: Operator):
        self.sigma = sigma
        self.op = op
        self.n = op.n

    def apply(self, phi):
        inv = self.sigma.inverse()
        return self.op.apply(phi.values_galois(inv)).values_galois(self.sigma)

    def describe(self):
        return {"op": "galois", "s": self.sigma.s, "inner": self.op.describe()}


# -- Schrodinger ----------------------------------------------------------------


class Schrodinger(Operator):
    """[S((x0+y0, t0)) phi](x') = lambda(t0 + x0.y0/2 + x'.y0) phi(x0 + x')."""

    def __init__(self, lam: AdditiveCharacter, h: HeisenbergElement, N: int, max_keys=DEFAULT_MAX_KEYS):
        self.lam = lam
        self.h = h
        self.n = h.n
        self.N = N
        self.max_keys = max_keys

    def out_cell(self, j, k):
        x0, y0 = self.h.x, self.h.y
        j2 = min(j, vmin(x0, self.lam.p))
        k2 = _max_finite(k, self.lam.level - vmin(y0, self.lam.p), j2)
        return j2, k2

    def apply(self, phi):
        p, n = self.lam.p, self.n
        N = max(self.N, phi.N)
        tw = tower(p, N)
        phi = phi.lift(N)
        if phi.is_zero():
            return phi
        x0, y0, t0 = self.h.x, self.h.y, self.h.t
        j2, k2 = self.out_cell(phi.j, phi.k)
        _check_size(p, n, j2, k2, self.max_keys)
        base = t0 + _dot(x0, y0) / 2
        # walk phi's support: x = x0 + x' with x' in p^{j2} O^n, keyed modulo p^{k2}
        j, width = phi.j, p ** (k2 - j2)
        lift = p ** (j - j2)
        shift = [residue(a / Fraction(p) ** j2, p, k2 - j2) for a in x0]
        pj = Fraction(p) ** j2
        table = {}
        for ckey, v in phi.table_at(j, k2).items():
            key = tuple((c * lift - s) % width for c, s in zip(ckey, shift))
            xp = tuple(c * pj for c in key)
            e = self.lam.exponent(base + _dot(xp, y0), N)
            table[key] = v * tw.root(e) if e else v
        return SchwartzFunction(p, n, j2, k2, table, N)

    def describe(self):
        return {"op": "S", "h": self.h.to_json(), "twist": str(self.lam.t)}


# -- measures -------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasureData:
    """Rao's measure on Y_g for a fixed decomposition g = p1 tau_i p2."""

    lam: AdditiveCharacter
    i: int
    # v(det(d1 d2)); the normalization scalar is p^{v/2} = |det(d1 d2)|^{-1/2}
    det_val: int
    # y -> (y d1)[:i] identifies Y_g with span(y_1..y_i)
    pbar: tuple
    N: int = 1

    @property
    def scalar(self) -> CyclotomicNumber:
        return tower(self.lam.p, self.N).sqrt_p_power(self.det_val)

    def coset_exponent(self, K: int) -> int:
        """Twice the p-exponent of the volume of (p^K O)^i in Y_{tau_i} coordinates."""
        return self.det_val + self.i * (self.lam.level - 2 * K)

    def coset_volume(self, K: int) -> CyclotomicNumber:
        return tower(self.lam.p, self.N).sqrt_p_power(self.coset_exponent(K))

    def lattice_image_exponent(self) -> int:
        """Twice the p-exponent of mu_g(image of O^n in Y_g); basis independent."""
        vi = _det_divisor_valuation(self.pbar, self.i, self.lam.p)
        return self.det_val + self.i * self.lam.level - 2 * vi

    def lattice_image_volume(self) -> CyclotomicNumber:
        return tower(self.lam.p, self.N).sqrt_p_power(self.lattice_image_exponent())

    def to_json(self):
        return {
            "i": self.i,
            "scalar": self.scalar.to_json(),
            "pbar": [[str(x) for x in row] for row in self.pbar],
        }


def _det_divisor_valuation(D, i, p):
    """Smallest valuation among i x i minors of the n x i matrix D."""
    if i == 0:
        return 0
    best = INF
    for rows in itertools.combinations(range(len(D)), i):
        minor = tuple(tuple(D[r][c] for c in range(i)) for r in rows)
        best = min(best, valuation(mat_det(minor), p))
    return best


def weil_measure(lam: AdditiveCharacter, dec: SiegelDecomposition, N: int = 1) -> MeasureData:
    d1, d2 = dec.p1.d, dec.p2.d
    det = mat_det(mat_mul(d1, d2))
    pbar = tuple(tuple(row[: dec.i]) for row in d1)
    return MeasureData(lam, dec.i, valuation(det, lam.p), pbar, N)


# -- Weil operators ---------------------------------------------------------------------


def _parabolic_cell(p, lam, a, b, j, k):
    S = mat_mul(a, transpose(b))
    va, vainv, vS = vmin(a, p), vmin(mat_inv(a), p), vmin(S, p)
    j2 = j + vainv
    l = lam.level
    if vS == INF:
        k2 = max(k - va, j2)
    else:
        k2 = max(k - va, l - vS - j2, _ceil_half(l - vS), j2)
    return j2, k2


def _tau_cell(lam, i, n, j, k):
    l = lam.level
    if i == 0:
        return j, k
    if i == n:
        return l - k, l - j
    return min(j, l - k), max(k, l - j)


def _apply_parabolic(lam, g: SymplecticElement, phi: SchwartzFunction, N, max_keys):
    p, n = lam.p, g.n
    tw = tower(p, N)
    a, b, _, _ = g.blocks()
    j2, k2 = _parabolic_cell(p, lam, a, b, phi.j, phi.k)
    _check_size(p, n, j2, k2, max_keys)
    S = mat_mul(a, transpose(b))
    has_phase = any(x != 0 for row in S for x in row)
    half_t = lam.t / 2
    pj = Fraction(p) ** j2
    table = {}
    fast = None if has_phase else _integral_keymap(a, p, j2, phi.j, phi.k)
    if fast is not None:
        mod = p ** (phi.k - phi.j)
        for key in cell_keys(p, n, j2, k2):
            src = tuple(sum(c * fast[r][col] for r, c in enumerate(key)) % mod for col in range(n))
            v = phi.table.get(src)
            if v is not None:
                table[key] = v
        keys = ()
    else:
        keys = cell_keys(p, n, j2, k2)
    for key in keys:
        x = tuple(c * pj for c in key)
        v = _lookup(phi, _vecmat(x, a))
        if v is None:
            continue
        if has_phase:
            e = char_exponent(half_t * _quad(x, S), p, N)
            if e:
                v = v * tw.root(e)
        table[key] = v
    scale = tw.sqrt_p_power(-valuation(mat_det(a), p))
    out = SchwartzFunction(p, n, j2, k2, table, N)
    return out if scale == 1 else out.scale(scale)


def _integral_keymap(a, p, j2, j, k):
    """Integer matrix sending output keys to input keys, when p^(j2-j) a is p-integral."""
    mod = p ** (k - j)
    shift = Fraction(p) ** (j2 - j)
    out = []
    for row in a:
        new = []
        for x in row:
            y = Fraction(x) * shift
            if y != 0 and valuation(y, p) < 0:
                return None
            new.append(y.numerator * pow(y.denominator, -1, mod) % mod if mod > 1 else 0)
        out.append(new)
    return out


def _apply_tau(lam, i, n, phi: SchwartzFunction, N, max_keys):
    """Partial Fourier transform in the first i coordinates."""
    p = lam.p
    tw = tower(p, N)
    if i == 0:
        return phi
    j, k = phi.j, phi.k
    j2, k2 = _tau_cell(lam, i, n, j, k)
    _check_size(p, n, j2, k2, max_keys)
    # when i < n the output grid can be coarser than l - k in the transformed
    # coordinates, so refine the input until the phase is constant per coset
    K = max(k, lam.level - j2)
    source = phi.table_at(j, K) if K > k else phi.table
    pj2 = Fraction(p) ** j2
    # lambda(-eta.x') with eta = p^j c, x' = p^{j2} d is lambda(z0 * (c.d))
    z0 = -lam.t * Fraction(p) ** (j + j2)
    try:
        e0 = char_exponent(z0, p, N)
        fast = True
    except TowerTooShallow:
        fast = False
    m = tw.m
    # group the input table by its trailing coordinates
    by_tail = {}
    for key, v in source.items():
        by_tail.setdefault(key[i:], []).append((key[:i], v))
    vol = tw.sqrt_p_power(i * (lam.level - 2 * K))
    table = {}
    for key in cell_keys(p, n, j2, k2):
        if i < n:
            tail_pt = tuple(c * pj2 for c in key[i:])
            tail = phi.key_of((Fraction(0),) * i + tail_pt, j, K)
            if tail is None:
                continue
            rows = by_tail.get(tail[i:])
            if not rows:
                continue
        else:
            rows = by_tail.get((), [])
        head = key[:i]
        counts = {}
        for c, v in rows:
            dot = sum(a * b for a, b in zip(c, head))
            if fast:
                e = dot * e0 % m
            else:
                e = char_exponent(z0 * dot, p, N)
            slot = counts.get(id(v))
            if slot is None:
                counts[id(v)] = (v, {e: 1})
            else:
                slot[1][e] = slot[1].get(e, 0) + 1
        total = _accumulate(tw, counts)
        if total is not None and not total.is_zero():
            table[key] = total
    out = SchwartzFunction(p, n, j2, k2, table, N)
    return out.scale(vol)


def _right_inverse(Mc, p):
    """An n x i right inverse R of the i x n matrix Mc with best vmin(R)."""
    i, n = len(Mc), len(Mc[0])
    best = None
    for cols in itertools.combinations(range(n), i):
        minor = tuple(tuple(Mc[r][c] for c in cols) for r in range(i))
        if mat_det(minor) == 0:
            continue
        inv = mat_inv(minor)
        R = [[Fraction(0)] * i for _ in range(n)]
        for idx, c in enumerate(cols):
            R[c] = list(inv[idx])
        R = tuple(tuple(r) for r in R)
        score = vmin(R, p)
        if best is None or score > best[0]:
            best = (score, R)
    if best is None:
        raise ArithmeticError("integration map has deficient rank")
    return best[1]


def _scale(m, c):
    return tuple(tuple(x * c for x in row) for row in m)


def _scaled_ints(mats, p, pw):
    """Clear a common denominator p^s d from the matrices.

    Returns the integer matrices, s, and d^{-1} modulo pw (or modulo p^s when
    pw is None).
    """
    den = 1
    for m in mats:
        for row in m:
            for x in row:
                den = math.lcm(den, x.denominator)
    s = 0
    unit = den
    while unit % p == 0:
        unit //= p
        s += 1
    ints = [tuple(tuple(int(x * den) for x in row) for row in m) for m in mats]
    mod = pw if pw is not None else p**s
    inv = pow(unit, -1, mod) if mod > 1 else 0
    return (*ints, s, inv)


def _ivecmat(v, m):
    if not m:
        return []
    return [sum(v[r] * m[r][c] for r in range(len(v))) for c in range(len(m[0]))]


def _iquad(v, m):
    if not m:
        return 0
    return sum(v[r] * m[r][c] * v[c] for r in range(len(v)) for c in range(len(v)))


class _PhaseReducer:
    """Maps an integer Z to the exponent of lambda_std(Z / (p^r d)) in zeta_{4p^N}."""

    def __init__(self, p, N, r, inv):
        self.p, self.N, self.r = p, N, r
        self.mod = p**r
        self.inv = inv
        self.up = 4 * p ** (N - r) if r <= N else None
        self.down = p ** (r - N) if r > N else None

    def __call__(self, Z):
        if self.r == 0:
            return 0
        a = Z * self.inv % self.mod
        if self.up is not None:
            return a * self.up
        if a % self.down:
            need = self.r
            while a % self.p == 0:
                a //= self.p
                need -= 1
            raise TowerTooShallow(need, self.N)
        return (a // self.down) * 4


class Weil(Operator):
    """W_lambda(g) with Rao's measures.

    mode="composed" applies W(p1) W(tau_i) W(p2); mode="direct" sums the
    defining integral for g itself over a finite window.
    """

    def __init__(
        self,
        lam: AdditiveCharacter,
        g: SymplecticElement,
        N: int,
        mode: str = "composed",
        certify: bool = False,
        max_keys: int = DEFAULT_MAX_KEYS,
        dec: SiegelDecomposition | None = None,
    ):
        if mode not in ("composed", "direct"):
            raise ValueError(f"unknown Weil mode {mode!r}")
        self.lam = lam
        self.g = g
        self.n = g.n
        self.N = N
        self.mode = mode
        self.certify = certify
        self.max_keys = max_keys
        self.dec = dec if dec is not None else bruhat_siegel(g, lam.p)
        self.measure = weil_measure(lam, self.dec, N)

    # cell bookkeeping
    def out_cell(self, j, k):
        p, lam, n = self.lam.p, self.lam, self.n
        if self.g.in_parabolic():
            return _parabolic_cell(p, lam, self.g.a, self.g.b, j, k)
        p1, i, p2 = self.dec.p1, self.dec.i, self.dec.p2
        j, k = _parabolic_cell(p, lam, p2.a, p2.b, j, k)
        j, k = _tau_cell(lam, i, n, j, k)
        return _parabolic_cell(p, lam, p1.a, p1.b, j, k)

    def apply(self, phi):
        N = max(self.N, phi.N)
        phi = phi.lift(N)
        if phi.is_zero():
            return phi
        if self.g.in_parabolic():
            return _apply_parabolic(self.lam, self.g, phi, N, self.max_keys)
        if self.mode == "composed":
            return self._composed(phi, N)
        out = self._direct(phi, N)
        if self.certify:
            self._certify(phi, out, N)
        return out

    def _composed(self, phi, N):
        p1, i, p2 = self.dec.p1, self.dec.i, self.dec.p2
        n = self.n
        if not _is_identity(p2):
            phi = _apply_parabolic(self.lam, p2, phi, N, self.max_keys)
        phi = _apply_tau(self.lam, i, n, phi, N, self.max_keys)
        if not _is_identity(p1):
            phi = _apply_parabolic(self.lam, p1, phi, N, self.max_keys)
        return phi

    def direct_window(self, phi, out_cell=None):
        """(output cell, J, K) for the finite sum of the defining integral."""
        p, lam = self.lam.p, self.lam
        a, b, c, d = self.g.blocks()
        i = self.dec.i
        if i == 0:
            return self.out_cell(phi.j, phi.k), 0, 0, None
        Minv = mat_inv(self.dec.p1.d)
        M = Minv[:i]
        Mc, Md = mat_mul(M, c), mat_mul(M, d)
        j2, k2 = out_cell if out_cell is not None else self.out_cell(phi.j, phi.k)
        R = _right_inverse(Mc, p)
        J = min(phi.j + vmin(R, p), j2 + vmin(mat_mul(a, R), p))
        T = mat_mul(Mc, transpose(Md))
        vT = vmin(T, p)
        l = lam.level
        bounds = [phi.k - vmin(Mc, p), J]
        vMb = vmin(mat_mul(Mc, transpose(b)), p)
        if vMb != INF:
            bounds.append(l - vMb - j2)
        if vT != INF:
            bounds += [l - vT - J, _ceil_half(l - vT)]
        return (j2, k2), J, max(bounds), (M, Mc, T)

    def _direct(self, phi, N, widen=0):
        p, lam, n = self.lam.p, self.lam, self.n
        tw = tower(p, N)
        a, b, c, d = self.g.blocks()
        i = self.dec.i
        (j2, k2), J, K, (M, Mc, T) = self.direct_window(phi)
        # widening keeps j2: points off the true support carry cancelling
        # terms whose individual phases can need a deeper tower
        k2, J, K = k2 + widen, J - widen, K + widen
        _check_size(p, n, j2, k2, self.max_keys)
        _check_size(p, i, J, K, self.max_keys)
        # integer coordinates: x = p^j2 X, eta = p^J H
        jf, w = phi.j, phi.k - phi.j
        pw = p**w
        A_int, C_int, s_exp, inv1 = _scaled_ints(
            [_scale(a, Fraction(p) ** (j2 - jf)), _scale(Mc, Fraction(p) ** (J - jf))], p, pw
        )
        ps = p**s_exp
        t = lam.t
        S_int, B_int, T_int, r_exp, inv2 = _scaled_ints(
            [
                _scale(mat_mul(a, transpose(b)), t * Fraction(p) ** (2 * j2) / 2),
                _scale(mat_mul(Mc, transpose(b)), t * Fraction(p) ** (J + j2)),
                _scale(T, t * Fraction(p) ** (2 * J) / 2),
            ],
            p,
            None,
        )
        phase = _PhaseReducer(p, N, r_exp, inv2)
        etas = []
        for H in cell_keys(p, i, J, K):
            HC = _ivecmat(H, C_int)
            etas.append((H, HC, _iquad(H, T_int)))
        table = {}
        lookup = phi.table
        for key in cell_keys(p, n, j2, k2):
            XA = _ivecmat(key, A_int)
            sX = _iquad(key, S_int)
            bx = [sum(B_int[r][c] * key[c] for c in range(n)) for r in range(i)]
            counts = {}
            for H, HC, hq in etas:
                U = [u + v for u, v in zip(XA, HC)]
                if any(u % ps for u in U):
                    continue
                v = lookup.get(tuple((u // ps) * inv1 % pw for u in U))
                if v is None:
                    continue
                e = phase(sX + hq + sum(h * b_ for h, b_ in zip(H, bx)))
                slot = counts.get(id(v))
                if slot is None:
                    counts[id(v)] = (v, {e: 1})
                else:
                    slot[1][e] = slot[1].get(e, 0) + 1
            total = _accumulate(tw, counts)
            if total is not None and not total.is_zero():
                table[key] = total
        vol = tw.sqrt_p_power(self.measure.coset_exponent(K))
        return SchwartzFunction(p, n, j2, k2, table, N).scale(vol)

    def _certify(self, phi, out, N):
        """Widen the summation window to (J-1, K+1) and refine the output grid once; nothing may move."""
        wide = self._direct(phi, N, widen=1)
        if wide != out:
            raise ArithmeticError(f"direct-mode window for {self.g!r} is not stable")

    def describe(self):
        return {"op": "W", "g": self.g.to_json(), "twist": str(self.lam.t), "mode": self.mode}


def _is_identity(g: SymplecticElement) -> bool:
    n2 = 2 * g.n
    return all(g.M[r][c] == (1 if r == c else 0) for r in range(n2) for c in range(n2))


class WeilInverse(Operator):
    """W(g)^{-1} = c^{-1} W(g^{-1}) where W(g) W(g^{-1}) = c."""

    def __init__(self, lam, g, N, max_keys=DEFAULT_MAX_KEYS, mode="composed"):
        self.lam = lam
        self.g = g
        self.n = g.n
        self.N = N
        self.inner = Weil(lam, g.inverse(), N, mode=mode, max_keys=max_keys)
        self.outer = Weil(lam, g, N, mode=mode, max_keys=max_keys)
        self._c_inv = None

    @property
    def multiplier(self) -> CyclotomicNumber:
        """c with W(g) W(g^{-1}) = c."""
        if self._c_inv is None:
            probe = atom(self.lam.p, (0,) * self.n, 0, self.N)
            c = _ratio(self.outer.apply(self.inner.apply(probe)), probe)
            self._c_inv = c.inverse()
        return self._c_inv.inverse()

    def apply(self, phi):
        if self._c_inv is None:
            self.multiplier
        return self.inner.apply(phi).scale(self._c_inv)

    def describe(self):
        return {"op": "W^-1", "g": self.g.to_json(), "twist": str(self.lam.t)}


def _ratio(f: SchwartzFunction, g: SchwartzFunction):
    """The scalar c with f = c g, or None if g = 0; raises when f is not a multiple of g."""
    if g.is_zero():
        return None
    N = max(f.N, g.N)
    f, g = f.lift(N), g.lift(N)
    key = min(g.table)
    pj = Fraction(g.p) ** g.j
    c = f.eval_at(tuple(x * pj for x in key)) / g.table[key]
    if f != g.scale(c):
        raise InconsistentMultiplier("functions are not proportional")
    return c


# -- cell-wise inverse ------------------------------------------------------------------


def _invert(rows, tw):
    """Columns of the inverse of a square matrix over E_N by Gauss-Jordan, or None if singular."""
    n = len(rows)
    A = [list(r) + [tw.one if c == i else tw.zero for c in range(n)] for i, r in enumerate(rows)]
    for col in range(n):
        piv = next((r for r in range(col, n) if not A[r][col].is_zero()), None)
        if piv is None:
            return None
        A[col], A[piv] = A[piv], A[col]
        inv = A[col][col].inverse()
        A[col] = [x if x.is_zero() else x * inv for x in A[col]]
        for r in range(n):
            if r != col and not A[r][col].is_zero():
                f = A[r][col]
                A[r] = [x if y.is_zero() else x - f * y for x, y in zip(A[r], A[col])]
    return [[A[r][n + c] for r in range(n)] for c in range(n)]


class CellInverse(Operator):
    """Inverse of a cell-preserving operator, solved exactly on each probe's cell.

    The matrix of the operator on the atoms of a cell is split into connected
    blocks; each block is solved once and cached per cell.
    """

    def __init__(self, op: Operator, p: int, N: int, max_keys=4096):
        self.op = op
        self.n = op.n
        self.p = p
        self.N = N
        self.max_keys = max_keys
        self._cache = {}

    def _blocks(self, j, k, N):
        cache_key = (j, k, N)
        hit = self._cache.get(cache_key)
        if hit is not None:
            return hit
        p, n = self.p, self.n
        _check_size(p, n, j, k, self.max_keys)
        tw = tower(p, N)
        keys = list(cell_keys(p, n, j, k))
        cols = {}
        one = tw.one
        for key in keys:
            img = self.op.apply(SchwartzFunction(p, n, j, k, {key: one}, N))
            if img.is_zero():
                raise SingularOperator("operator kills an atom", cell=(j, k))
            if img.j < j or img.k > k:
                raise SingularOperator("operator does not preserve the cell", cell=(j, k))
            cols[key] = img.lift(N).table_at(j, k)
        # connected components of the bipartite incidence graph
        parent = {key: key for key in keys}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for key, col in cols.items():
            for r in col:
                ra, rb = find(key), find(r)
                if ra != rb:
                    parent[ra] = rb
        comps = {}
        for key in keys:
            comps.setdefault(find(key), []).append(key)
        blocks = []
        for members in comps.values():
            members.sort()
            idx = {key: t for t, key in enumerate(members)}
            size = len(members)
            # matrix rows = output coordinates, cols = input atoms
            mat = [[tw.zero] * size for _ in range(size)]
            for ci, key in enumerate(members):
                for r, v in cols[key].items():
                    mat[idx[r]][ci] = v
            inv_cols = _invert(mat, tw)
            if inv_cols is None:
                raise SingularOperator("operator is singular on the cell", cell=(j, k))
            blocks.append((members, idx, inv_cols))
        lookup = {}
        for members, idx, inv_cols in blocks:
            for key in members:
                lookup[key] = (members, idx, inv_cols)
        self._cache[cache_key] = lookup
        return lookup

    def apply(self, phi):
        if phi.is_zero():
            return phi
        N = max(self.N, phi.N)
        phi = phi.lift(N)
        lookup = self._blocks(phi.j, phi.k, N)
        out = {}
        for r, v in phi.table.items():
            members, idx, inv_cols = lookup[r]
            col = inv_cols[idx[r]]
            for t, key in enumerate(members):
                w = col[t]
                if w.is_zero():
                    continue
                prev = out.get(key)
                out[key] = w * v if prev is None else prev + w * v
        return SchwartzFunction(self.p, self.n, phi.j, phi.k, out, N)

    def describe(self):
        return {"op": "inverse", "of": self.op.describe()}


# -- checks -------------------------------------------------------------------------------


@dataclass
class Agreement:
    ok: bool
    witness: dict | None = None
    checked: int = 0


def operators_agree(lhs: Operator, rhs: Operator, probes) -> Agreement:
    """Exact equality of two operators on every probe; the first failure is kept."""
    count = 0
    for phi in probes:
        left, right = lhs.apply(phi), rhs.apply(phi)
        N = max(left.N, right.N)
        if left.lift(N) != right.lift(N):
            return Agreement(False, {"probe": phi.to_json(), "lhs": left.to_json(), "rhs": right.to_json()}, count)
        count += 1
    return Agreement(True, None, count)


def projective_multiplier(lam, g1, g2, probes, N, mode="composed") -> CyclotomicNumber:
    """c with W(g1) W(g2) phi = c W(g1 g2) phi for every probe."""
    w1, w2 = Weil(lam, g1, N, mode), Weil(lam, g2, N, mode)
    w12 = Weil(lam, g1 * g2, N, mode)
    c = None
    for phi in probes:
        lhs = w1.apply(w2.apply(phi))
        rhs = w12.apply(phi)
        if rhs.is_zero():
            if not lhs.is_zero():
                raise InconsistentMultiplier("W(g1 g2) kills a probe that W(g1) W(g2) does not")
            continue
        ci = _ratio(lhs, rhs)
        if c is None:
            c = ci
        elif ci != c:
            raise InconsistentMultiplier("probe ratios disagree")
    if c is None:
        raise InconsistentMultiplier("all probes are annihilated")
    return c


def intertwine_check(lam, g, h, probes, N, mode="composed") -> Agreement:
    """W(g)^{-1} S(h) W(g) = S(h g) on probes."""
    lhs = Compose([WeilInverse(lam, g, N, mode=mode), Schrodinger(lam, h, N), Weil(lam, g, N, mode)])
    rhs = Schrodinger(lam, h.act(g), N)
    return operators_agree(lhs, rhs, probes)
