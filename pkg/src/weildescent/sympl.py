"""Sp(2n, F) in the row-vector convention, the Heisenberg group, Bruhat-Siegel.

A vector (x, y) in V = X + Y maps to (x, y) g.  Blocks of g:

    g = [[a, b],
         [c, d]]      a: X->X, b: X->Y, c: Y->X, d: Y->Y

The symplectic form is <(x,y),(x',y')> = x.y' - y.x', Gram matrix
J = [[0, I], [-I, 0]], and g is symplectic iff g J g^T = J.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import NotInGroup
from .localfield import valuation

__all__ = [
    "Mat",
    "mat_mul",
    "mat_inv",
    "mat_rank",
    "mat_det",
    "transpose",
    "identity_mat",
    "SymplecticElement",
    "SiegelDecomposition",
    "HeisenbergElement",
    "identity",
    "tau",
    "levi",
    "unip",
    "lower",
    "g_s",
    "p_is",
    "iota",
    "f_s",
    "conj_fs",
    "bruhat_siegel",
    "parse_word",
    "parse_heisenberg",
    "random_word",
    "generator_words",
    "heisenberg_generators",
]

Mat = tuple  # tuple of row tuples of Fractions


def _F(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def as_mat(rows) -> Mat:
    return tuple(tuple(_F(x) for x in row) for row in rows)


def identity_mat(n: int) -> Mat:
    return tuple(tuple(Fraction(int(r == c)) for c in range(n)) for r in range(n))


def zero_mat(r: int, c: int) -> Mat:
    return tuple((Fraction(0),) * c for _ in range(r))


def transpose(m: Mat) -> Mat:
    return tuple(zip(*m)) if m else m


def mat_mul(a: Mat, b: Mat) -> Mat:
    bt = transpose(b)
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt) for row in a)


def mat_add(a: Mat, b: Mat) -> Mat:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_neg(a: Mat) -> Mat:
    return tuple(tuple(-x for x in row) for row in a)


def vec_mat(v, m: Mat):
    """Row vector times matrix."""
    cols = len(m[0]) if m else 0
    return tuple(sum((v[r] * m[r][c] for r in range(len(v))), Fraction(0)) for c in range(cols))


def _echelon(m: Mat):
    rows = [list(r) for r in m]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pv = rows[rank][col]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                f = rows[r][col] / pv
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
    return rows, rank


def mat_rank(m: Mat) -> int:
    if not m or not m[0]:
        return 0
    return _echelon(m)[1]


def mat_det(m: Mat) -> Fraction:
    n = len(m)
    rows = [list(r) for r in m]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            rows[col], rows[piv] = rows[piv], rows[col]
            det = -det
        pv = rows[col][col]
        det *= pv
        for r in range(col + 1, n):
            if rows[r][col] != 0:
                f = rows[r][col] / pv
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[col])]
    return det


def mat_inv(m: Mat) -> Mat:
    n = len(m)
    aug = as_mat([list(row) + [Fraction(int(r == c)) for c in range(n)] for r, row in enumerate(m)])
    rows, rank = _echelon(aug)
    if rank < n or any(rows[r][r] == 0 for r in range(n)):
        raise ZeroDivisionError("matrix is singular")
    return tuple(tuple(x / rows[r][r] for x in rows[r][n:]) for r in range(n))


def blocks(m: Mat, n: int):
    a = tuple(row[:n] for row in m[:n])
    b = tuple(row[n:] for row in m[:n])
    c = tuple(row[:n] for row in m[n:])
    d = tuple(row[n:] for row in m[n:])
    return a, b, c, d


def from_blocks(a, b, c, d) -> Mat:
    top = tuple(tuple(ra) + tuple(rb) for ra, rb in zip(a, b))
    bot = tuple(tuple(rc) + tuple(rd) for rc, rd in zip(c, d))
    return top + bot


def gram(n: int) -> Mat:
    z, i = zero_mat(n, n), identity_mat(n)
    return from_blocks(z, i, mat_neg(i), z)


def _fmt(x: Fraction) -> str:
    return str(x)


class SymplecticElement:
    """An element of Sp(2n, Q) viewed inside Sp(2n, Q_p)."""

    __slots__ = ("n", "M", "_hash")

    def __init__(self, M, check=True):
        M = as_mat(M)
        if len(M) % 2 or any(len(r) != len(M) for r in M):
            raise ValueError("expected a square matrix of even size")
        self.n = len(M) // 2
        self.M = M
        self._hash = None
        if check and not self.is_symplectic():
            raise NotInGroup("matrix does not preserve the symplectic form")

    @property
    def a(self):
        return blocks(self.M, self.n)[0]

    @property
    def b(self):
        return blocks(self.M, self.n)[1]

    @property
    def c(self):
        return blocks(self.M, self.n)[2]

    @property
    def d(self):
        return blocks(self.M, self.n)[3]

    def blocks(self):
        return blocks(self.M, self.n)

    def is_symplectic(self) -> bool:
        J = gram(self.n)
        return mat_mul(mat_mul(self.M, J), transpose(self.M)) == J

    def in_parabolic(self) -> bool:
        return all(x == 0 for row in self.c for x in row)

    def __mul__(self, other: "SymplecticElement") -> "SymplecticElement":
        if not isinstance(other, SymplecticElement):
            return NotImplemented
        return SymplecticElement(mat_mul(self.M, other.M), check=False)

    def inverse(self) -> "SymplecticElement":
        # g J g^T = J  =>  g^{-1} = J g^T J^{-1} = -J g^T J
        J = gram(self.n)
        return SymplecticElement(mat_neg(mat_mul(mat_mul(J, transpose(self.M)), J)), check=False)

    def __pow__(self, k: int):
        out = identity(self.n)
        base = self if k >= 0 else self.inverse()
        for _ in range(abs(k)):
            out = out * base
        return out

    def act(self, v):
        """(x, y) -> (x, y) g for a row vector of length 2n."""
        return vec_mat([_F(x) for x in v], self.M)

    def __eq__(self, other):
        if not isinstance(other, SymplecticElement):
            return NotImplemented
        return self.M == other.M

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.M)
        return self._hash

    def __repr__(self):
        rows = "; ".join(" ".join(_fmt(x) for x in row) for row in self.M)
        return f"SymplecticElement([{rows}])"

    def to_json(self):
        return [[str(x) for x in row] for row in self.M]

    @classmethod
    def from_json(cls, data):
        return cls([[Fraction(x) for x in row] for row in data])

    def entries(self):
        return [x for row in self.M for x in row]


# -- standard elements --------------------------------------------------------


def identity(n: int) -> SymplecticElement:
    return SymplecticElement(identity_mat(2 * n), check=False)


def tau(n: int, i: int) -> SymplecticElement:
    """x_j -> -y_j and y_j -> x_j for j <= i; the rest fixed."""
    if not 0 <= i <= n:
        raise ValueError(f"tau index must lie in [0, {n}], got {i}")
    M = [[Fraction(0)] * (2 * n) for _ in range(2 * n)]
    for j in range(n):
        if j < i:
            M[j][n + j] = Fraction(-1)
            M[n + j][j] = Fraction(1)
        else:
            M[j][j] = Fraction(1)
            M[n + j][n + j] = Fraction(1)
    return SymplecticElement(M, check=False)


def _square(a, n):
    if not isinstance(a, (list, tuple)):
        a = _F(a)
        return tuple(tuple(a if r == c else Fraction(0) for c in range(n)) for r in range(n))
    return as_mat(a)


def levi(a, n: int = None) -> SymplecticElement:
    """diag(a, a^{-T}); a may be a scalar (times identity) or an n x n matrix."""
    if n is None:
        n = len(a) if isinstance(a, (list, tuple)) else 1
    a = _square(a, n)
    if mat_det(a) == 0:
        raise ValueError("levi(a) needs an invertible a")
    d = transpose(mat_inv(a))
    z = zero_mat(n, n)
    return SymplecticElement(from_blocks(a, z, z, d), check=False)


def unip(b, n: int = None) -> SymplecticElement:
    """[[I, b], [0, I]] for symmetric b."""
    if n is None:
        n = len(b) if isinstance(b, (list, tuple)) else 1
    b = _square(b, n)
    if b != transpose(b):
        raise ValueError("unip(b) needs a symmetric b")
    return SymplecticElement(from_blocks(identity_mat(n), b, zero_mat(n, n), identity_mat(n)), check=False)


def lower(u, n: int = None) -> SymplecticElement:
    """[[I, 0], [u, I]] for symmetric u."""
    if n is None:
        n = len(u) if isinstance(u, (list, tuple)) else 1
    u = _square(u, n)
    if u != transpose(u):
        raise ValueError("lower(u) needs a symmetric u")
    return SymplecticElement(from_blocks(identity_mat(n), zero_mat(n, n), u, identity_mat(n)), check=False)


def p_is(n: int, i: int, s) -> SymplecticElement:
    """x_j -> s^{-1} x_j, y_j -> s y_j for j <= i."""
    s = _F(s)
    if s == 0:
        raise ValueError("p_{i,s} needs s != 0")
    diag = [Fraction(1) / s if j < i else Fraction(1) for j in range(n)]
    diag += [s if j < i else Fraction(1) for j in range(n)]
    M = [[diag[r] if r == c else Fraction(0) for c in range(2 * n)] for r in range(2 * n)]
    return SymplecticElement(M, check=False)


def g_s(n: int, s) -> SymplecticElement:
    """(x + y) g_s = s^{-1} x + s y."""
    return p_is(n, n, s)


def iota(n: int) -> SymplecticElement:
    return g_s(n, -1)


def f_s(n: int, s) -> Mat:
    """The similitude diag(I, s I); not symplectic, so returned as a bare matrix."""
    s = _F(s)
    if s == 0:
        raise ValueError("f_s needs s != 0")
    return from_blocks(identity_mat(n), zero_mat(n, n), zero_mat(n, n), _square(s, n))


def conj_fs(g: SymplecticElement, s) -> SymplecticElement:
    """g^{f_s} = f_s^{-1} g f_s, with blocks (a, s b; c / s, d)."""
    s = _F(s)
    if s == 0:
        raise ValueError("conjugation by f_s needs s != 0")
    a, b, c, d = g.blocks()
    b2 = tuple(tuple(x * s for x in row) for row in b)
    c2 = tuple(tuple(x / s for x in row) for row in c)
    return SymplecticElement(from_blocks(a, b2, c2, d), check=False)


# -- Bruhat-Siegel decomposition ---------------------------------------------------


@dataclass(frozen=True)
class SiegelDecomposition:
    p1: SymplecticElement
    i: int
    p2: SymplecticElement

    def product(self) -> SymplecticElement:
        return self.p1 * tau(self.p1.n, self.i) * self.p2

    def to_json(self):
        return {"p1": self.p1.to_json(), "i": self.i, "p2": self.p2.to_json()}


def _rank_normalize(c: Mat, p=None):
    """Invertible U, V and the rank i with U c V = E_i (identity in the top-left i x i block)."""
    n = len(c)
    M = [list(r) for r in c]
    U = [list(r) for r in identity_mat(n)]
    V = [list(r) for r in identity_mat(n)]
    r = 0
    while r < n:
        cands = [(rr, cc) for rr in range(r, n) for cc in range(r, n) if M[rr][cc] != 0]
        if not cands:
            break
        if p is not None:
            rr, cc = min(cands, key=lambda rc: (valuation(M[rc[0]][rc[1]], p), rc))
        else:
            rr, cc = cands[0]
        M[r], M[rr] = M[rr], M[r]
        U[r], U[rr] = U[rr], U[r]
        for row in M:
            row[r], row[cc] = row[cc], row[r]
        for row in V:
            row[r], row[cc] = row[cc], row[r]
        pv = M[r][r]
        M[r] = [x / pv for x in M[r]]
        U[r] = [x / pv for x in U[r]]
        for q in range(n):
            if q != r and M[q][r] != 0:
                f = M[q][r]
                M[q] = [x - f * y for x, y in zip(M[q], M[r])]
                U[q] = [x - f * y for x, y in zip(U[q], U[r])]
        for q in range(n):
            if q != r and M[r][q] != 0:
                f = M[r][q]
                for row in M:
                    row[q] -= f * row[r]
                for row in V:
                    row[q] -= f * row[r]
        r += 1
    return as_mat(U), as_mat(V), r


def bruhat_siegel(g: SymplecticElement, p=None) -> SiegelDecomposition:
    """g = p1 tau_i p2 with p1, p2 in the Siegel parabolic and i = rank(c).

    ``p`` only steers pivot choice toward small p-adic valuations.
    """
    n = g.n
    _, _, c, _ = g.blocks()
    U, V, i = _rank_normalize(c, p)
    if i == 0:
        return SiegelDecomposition(identity(n), 0, g)
    # levi(P) g levi(Q) has c-block P^{-T} c Q; choose P^{-T} = U, Q = V
    L1 = levi(transpose(mat_inv(U)), n)
    L2 = levi(V, n)
    g1 = L1 * g * L2
    a, b, c1, d = g1.blocks()
    # clear the first i rows of d from the right
    beta = [[Fraction(0)] * n for _ in range(n)]
    for r in range(i):
        for q in range(n):
            beta[r][q] = -d[r][q]
            beta[q][r] = -d[r][q]
    u2 = unip(beta, n)
    # clear the first i columns of a from the left
    beta2 = [[Fraction(0)] * n for _ in range(n)]
    for q in range(n):
        for r in range(i):
            beta2[q][r] = -a[q][r]
            beta2[r][q] = -a[q][r]
    u1 = unip(beta2, n)
    g2 = u1 * g1 * u2
    q = tau(n, i).inverse() * g2
    if not q.in_parabolic():
        raise ArithmeticError("Bruhat-Siegel elimination failed; input may not be symplectic")
    p1 = L1.inverse() * u1.inverse()
    p2 = q * u2.inverse() * L2.inverse()
    dec = SiegelDecomposition(p1, i, p2)
    if dec.product() != g:
        raise ArithmeticError("Bruhat-Siegel factors do not multiply back to g")
    return dec


# -- Heisenberg group ---------------------------------------------------------


def pairing(v, w, n: int) -> Fraction:
    return sum((v[k] * w[n + k] - v[n + k] * w[k] for k in range(n)), Fraction(0))


@dataclass(frozen=True)
class HeisenbergElement:
    """(v, t) with v = (x, y) in F^{2n}; (v,t)(v',t') = (v+v', t+t'+<v,v'>/2)."""

    v: tuple
    t: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(_F(x) for x in self.v))
        object.__setattr__(self, "t", _F(self.t))
        if len(self.v) % 2:
            raise ValueError("Heisenberg vector must have even length")

    @property
    def n(self):
        return len(self.v) // 2

    @property
    def x(self):
        return self.v[: self.n]

    @property
    def y(self):
        return self.v[self.n :]

    def __mul__(self, other: "HeisenbergElement") -> "HeisenbergElement":
        v = tuple(a + b for a, b in zip(self.v, other.v))
        return HeisenbergElement(v, self.t + other.t + pairing(self.v, other.v, self.n) / 2)

    def inverse(self) -> "HeisenbergElement":
        return HeisenbergElement(tuple(-a for a in self.v), -self.t)

    def act(self, g: SymplecticElement) -> "HeisenbergElement":
        """(v, t) g = (v g, t)."""
        return HeisenbergElement(g.act(self.v), self.t)

    def is_central(self) -> bool:
        return all(a == 0 for a in self.v)

    def to_json(self):
        return {"v": [str(a) for a in self.v], "t": str(self.t)}


def heisenberg_generators(n: int, p: int):
    """Unit and 1/p translates along each basis vector, plus a central element."""
    out = []
    for k in range(2 * n):
        for c in (Fraction(1), Fraction(1, p)):
            v = [Fraction(0)] * (2 * n)
            v[k] = c
            out.append(HeisenbergElement(tuple(v), Fraction(0)))
    out.append(HeisenbergElement((Fraction(0),) * (2 * n), Fraction(1, p)))
    return out


# -- word parsing ---------------------------------------------------------------------

_TOKEN = re.compile(r"\s*([A-Za-z_]+[0-9]*)\s*(\(([^()]*)\))?\s*")


def _parse_args(text: str, n: int, what: str):
    """'q' -> scalar, 'q1,..,qn' -> diagonal, 'r1;r2;..' rows -> matrix."""
    text = text.strip()
    if ";" in text:
        rows = [[Fraction(x.strip()) for x in r.split(",")] for r in text.split(";")]
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError(f"{what}: expected a {n}x{n} matrix")
        return as_mat(rows)
    vals = [Fraction(x.strip()) for x in text.split(",")]
    if len(vals) == 1:
        return _square(vals[0], n)
    if len(vals) != n:
        raise ValueError(f"{what}: expected 1 or {n} entries")
    return tuple(tuple(vals[r] if r == c else Fraction(0) for c in range(n)) for r in range(n))


def _word_factor(name: str, args, n: int) -> SymplecticElement:
    m = re.fullmatch(r"tau(\d*)", name)
    if m:
        i = int(m.group(1)) if m.group(1) else (int(args) if args else n)
        return tau(n, i)
    if name in ("id", "identity", "I"):
        return identity(n)
    if name == "iota":
        return iota(n)
    if args is None:
        raise ValueError(f"generator {name!r} needs an argument")
    if name == "levi":
        return levi(_parse_args(args, n, name), n)
    if name == "unip":
        return unip(_parse_args(args, n, name), n)
    if name == "lower":
        return lower(_parse_args(args, n, name), n)
    if name in ("g", "g_s", "gs"):
        return g_s(n, Fraction(args.strip()))
    if name in ("p", "p_is"):
        i, s = [x.strip() for x in args.split(",")]
        return p_is(n, int(i), Fraction(s))
    raise ValueError(f"unknown generator {name!r}")


def parse_word(text: str, n: int = 1) -> SymplecticElement:
    """Parse a product such as 'tau1*unip(1/3)*levi(2)'."""
    g = identity(n)
    pos = 0
    for part in text.split("*"):
        m = _TOKEN.fullmatch(part)
        if not m:
            raise ValueError(f"cannot parse generator at position {pos}: {part!r}")
        try:
            g = g * _word_factor(m.group(1), m.group(3), n)
        except ValueError as exc:
            raise ValueError(f"at position {pos}: {exc}") from None
        pos += len(part) + 1
    return g


def parse_heisenberg(text: str, n: int = 1) -> HeisenbergElement:
    """Parse 'y(1/3),0' or 'x1(1)+y2(1/5),1/3' into (v, t)."""
    text = text.strip()
    vec, _, t = text.rpartition(",")
    if not vec:
        vec, t = text, "0"
    v = [Fraction(0)] * (2 * n)
    for term in vec.split("+"):
        term = term.strip()
        if term in ("0", ""):
            continue
        m = re.fullmatch(r"([xy])(\d*)\(([^()]*)\)", term)
        if not m:
            raise ValueError(f"cannot parse Heisenberg term {term!r}")
        k = int(m.group(2) or 1) - 1
        if not 0 <= k < n:
            raise ValueError(f"basis index out of range in {term!r}")
        v[k + (n if m.group(1) == "y" else 0)] += Fraction(m.group(3))
    return HeisenbergElement(tuple(v), Fraction(t.strip()))


def random_word(n: int, length: int, rng: random.Random, p: int, allow_tau=True):
    """A random product of generators with small entries; returns (text, element)."""
    scalars = [Fraction(1), Fraction(-1), Fraction(2), Fraction(p), Fraction(1, p)]
    choices = ["levi", "unip", "g"] + (["tau"] * 2 if allow_tau else [])
    parts = []
    for _ in range(length):
        kind = rng.choice(choices)
        if kind == "tau":
            parts.append(f"tau{rng.randint(1, n)}")
        elif kind == "levi":
            if n == 1:
                parts.append(f"levi({rng.choice([Fraction(2), Fraction(-1), Fraction(p)])})")
            else:
                off = rng.choice([0, 1, -1, p])
                parts.append(f"levi(1,{off};0,1)" if n == 2 else f"levi({rng.choice([2, -1])})")
        elif kind == "unip":
            if n == 1:
                parts.append(f"unip({rng.choice(scalars)})")
            else:
                e = [rng.choice([0, 1, Fraction(1, p)]) for _ in range(3)]
                parts.append(f"unip({e[0]},{e[1]};{e[1]},{e[2]})" if n == 2 else f"unip({e[0]})")
        else:
            parts.append(f"g({rng.choice([Fraction(2), Fraction(p), Fraction(1, p)])})")
    text = "*".join(parts) if parts else "id"
    return text, parse_word(text, n)


def generator_words(n: int, p: int) -> list:
    """The fixed generator set used by the verification suites, as parseable words."""
    if n == 1:
        return ["tau1", "levi(2)", "levi(-1)", "unip(1)", f"unip(1/{p})", f"g({p})", f"g(1/{p})", "iota", f"lower({p})"]
    out = [f"tau{i}" for i in range(1, n + 1)]
    off = ";".join(",".join("1" if r == c or (r, c) == (0, 1) else "0" for c in range(n)) for r in range(n))
    sym = ";".join(",".join("1" if (r, c) in ((0, 1), (1, 0)) else "0" for c in range(n)) for r in range(n))
    out += [f"levi({off})", "levi(2)", f"unip({sym})", f"unip(1/{p})", f"g({p})", "iota"]
    return out
