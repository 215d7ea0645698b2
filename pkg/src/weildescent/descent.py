"""A constructive splitting of delta and the rationality check for conjugated Weil operators.

With B = sum_sigma sigma(theta) delta(sigma) over the finite group H_N, the
cocycle law gives ^tau B = delta(tau)^{-1} B, so alpha = B^{-1} satisfies
delta(tau) = alpha^{-1} ^tau alpha.  Then alpha W(g) alpha^{-1} = B^{-1} W(g) B
commutes with the Galois action and maps K-rational functions to K-rational
functions, K = Q(sqrt p, sqrt -p).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .cocycle import Delta, cocycle_data, sigma_decompose, transversal
from .cyclo import K_MAIN, tower
from .errors import CellOverflow, SingularOperator, TowerTooShallow
from .rep import Compose, GaloisConjugate, Operator, Weil, operators_agree
from .schwartz import SchwartzFunction, cell_atoms
from .shells import DilationInverse
from .sympl import parse_word, random_word
from .twists import TwistReport

__all__ = [
    "SplittingData",
    "default_thetas",
    "build_splitting",
    "split_check",
    "certificate_check",
    "main_theorem_check",
    "splitting",
    "Tabulated",
    "word_depth",
    "tractable_words",
]


def default_thetas(p, N, count=6):
    """Seeded dense elements of E_N.

    Sparse seeds such as single roots of unity fail: on a cell of width w, delta
    only sees sigma through H_w, and the partial traces of most sparse seeds over
    the kernel vanish.  A dense seed is generic for every cell at once.
    """
    tw = tower(p, N)
    out = []
    rng = random.Random(f"theta:{p}:{N}")
    for _ in range(count):
        out.append(tw.from_exponents({e: rng.randint(-9, 9) for e in range(tw.degree)}))
    return out


@dataclass
class SplittingData:
    p: int
    N: int
    n: int
    theta: object
    B: Operator
    alpha: DilationInverse
    sigmas: tuple
    certified_cells: list = field(default_factory=list)

    def alpha_inv(self):
        return self.B

    def conjugate(self, g, mode="composed"):
        """alpha W(g) alpha^{-1} = B^{-1} W(g) B."""
        data = cocycle_data(self.p, self.N)
        return Compose([self.alpha, Weil(data.lam, g, self.N, mode), self.B])

    def ensure_cell(self, cell):
        """Invert B on the cell (raises SingularOperator) and record it."""
        j, k = cell
        self.alpha.structure(j, k, self.N)
        if list(cell) not in self.certified_cells:
            self.certified_cells.append(list(cell))
            self.certified_cells.sort()

    def to_json(self):
        return {
            "p": self.p,
            "N": self.N,
            "theta": self.theta.to_json(),
            "transversal": [sigma_decompose(s, self.p, self.N).to_json() | {"exponent": s.s} for s in self.sigmas],
            "certified_cells": self.certified_cells,
        }


class Averaged(Operator):
    """B = sum_sigma sigma(theta) delta(sigma), summed class by class.

    On a cell of width w <= N, delta(sigma) depends only on i and s mod p^w, so
    the sigma(theta) are first added up inside each class.
    """

    def __init__(self, data, theta, sigmas, n=1):
        self.data = data
        self.theta = theta
        self.sigmas = sigmas
        self.n = n
        self._classes = {}

    def terms(self, width):
        width = min(width, self.data.N)
        hit = self._classes.get(width)
        if hit is None:
            p = self.data.p
            groups = {}
            for sigma in self.sigmas:
                dec = sigma_decompose(sigma, p, self.data.N)
                key = (dec.i, dec.s % p**width)
                coeff = sigma(self.theta)
                if key in groups:
                    groups[key][0] = groups[key][0] + coeff
                else:
                    groups[key] = [coeff, Delta(self.data, sigma, self.n)]
            hit = self._classes[width] = [(c, d) for c, d in groups.values() if not c.is_zero()]
        return hit

    def apply(self, phi):
        if phi.is_zero():
            return phi
        N = max(self.data.N, phi.N)
        phi = phi.lift(N)
        j, k = phi.j, phi.k
        acc = {}
        for coeff, delta in self.terms(k - j):
            img = delta.apply(phi)
            for key, v in img.table_at(j, k).items():
                w = v * coeff
                prev = acc.get(key)
                acc[key] = w if prev is None else prev + w
        return SchwartzFunction(phi.p, phi.n, j, k, acc, N)

    def describe(self):
        return {"op": "averaged", "theta": self.theta.to_json(), "size": len(self.sigmas)}


def _make_B(p, N, n, theta):
    data = cocycle_data(p, N)
    sigmas = transversal(p, N)
    return Averaged(data, theta, sigmas, n), sigmas


def build_splitting(p, N, theta_candidates=None, cells=((0, 1),), n=1) -> SplittingData:
    """The first theta for which B is invertible on all the given cells."""
    thetas = list(theta_candidates) if theta_candidates is not None else default_thetas(p, N)
    failures = []
    for theta in thetas:
        theta = theta.lift(N) if hasattr(theta, "lift") else tower(p, N).scalar(theta)
        B, sigmas = _make_B(p, N, n, theta)
        S = SplittingData(p, N, n, theta, B, DilationInverse(B, p, N, n), sigmas)
        try:
            for cell in cells:
                S.ensure_cell(cell)
        except SingularOperator as exc:
            failures.append(exc.cell)
            continue
        return S
    raise SingularOperator(f"no theta among {len(thetas)} candidates makes B invertible", cell=failures[-1])


_CACHE = {}


def splitting(p, N, n=1) -> SplittingData:
    """Cached default splitting."""
    key = (p, N, n)
    if key not in _CACHE:
        _CACHE[key] = build_splitting(p, N, n=n)
    return _CACHE[key]


def certificate_check(S: SplittingData, tau, probes) -> TwistReport:
    """^tau B = delta(tau)^{-1} B on probes."""
    data = cocycle_data(S.p, S.N)
    lhs = GaloisConjugate(tau, S.B)
    rhs = Compose([Delta(data, tau, S.n, inverse=True), S.B])
    res = operators_agree(lhs, rhs, probes)
    return TwistReport("descent.certificate", {"tau": tau.s}, res.checked, res.ok, res.witness)


def split_check(S: SplittingData, sigma, probes) -> TwistReport:
    """alpha^{-1} ^sigma alpha = delta(sigma) on probes."""
    data = cocycle_data(S.p, S.N)
    lhs = Compose([S.B, GaloisConjugate(sigma, S.alpha)])
    try:
        res = operators_agree(lhs, Delta(data, sigma, S.n), probes)
    except SingularOperator as exc:
        return TwistReport("descent.split", {"sigma": sigma.s}, 0, False, {"singular_cell": list(exc.cell)})
    return TwistReport("descent.split", {"sigma": sigma.s}, res.checked, res.ok, res.witness)


class Tabulated(Operator):
    """An E_N-linear operator known through its values on the atoms of one cell."""

    def __init__(self, p, n, cell, N, columns):
        self.p = p
        self.n = n
        self.cell = cell
        self.N = N
        self.columns = columns

    def apply(self, phi):
        j, k = self.cell
        phi = phi.lift(self.N)
        out = SchwartzFunction.zero(self.p, self.n, self.N)
        for key, v in phi.table_at(j, k).items():
            out = out + self.columns[key].scale(v)
        return out

    def describe(self):
        return {"op": "tabulated", "cell": list(self.cell)}


class _Deeper(Exception):
    pass


def _tabulate(T, g, cell, mode):
    """B^{-1} W(g) B on every atom of the cell, the solves batched into one call."""
    data = cocycle_data(T.p, T.N)
    W = Weil(data.lam, g, T.N, mode)
    j, k = cell
    atoms = cell_atoms(T.p, T.n, j, k, T.N)
    mids = []
    for a in atoms:
        mid = W.apply(T.B.apply(a))
        # the cocycle identity is exact only on cells of width <= N
        if mid.k - mid.j > T.N:
            raise _Deeper("cell wider than N")
        mids.append(mid)
    psis = T.alpha.apply_many(mids)
    keys = [next(iter(a.refine(j, k).table)) for a in atoms]
    return Tabulated(T.p, T.n, cell, T.N, dict(zip(keys, psis)))


def _hull(probes):
    live = [phi for phi in probes if not phi.is_zero()]
    return (min(phi.j for phi in live), max(phi.k for phi in live))


def main_theorem_check(S: SplittingData, g, probes, extra_probes=(), mode="composed", max_extra_depth=1, cell=None):
    """B^{-1} W(g) B maps K-rational probes to K-rational functions and is Galois-fixed.

    The operator is tabulated on the atoms of the working cell (by default the
    hull of the probes) and applied to probes by E_N-linearity.  If the
    computation needs roots deeper than zeta_{4p^N}, or passes through a cell
    wider than N, the splitting is rebuilt one level up (at most
    max_extra_depth times); the level used is recorded in the report.
    """
    cell = tuple(cell) if cell is not None else _hull(list(probes) + list(extra_probes))
    params = {"g": g.to_json(), "cell": list(cell), "N": S.N}
    last = None
    for depth in range(max_extra_depth + 1):
        T = S if depth == 0 else splitting(S.p, S.N + depth, S.n)
        phis = [phi.lift(T.N) for phi in probes]
        extra = [phi.lift(T.N) for phi in extra_probes]
        try:
            tab = _tabulate(T, g, cell, mode)
            return _main_at(T, tab, phis, extra, dict(params, N=T.N))
        except _Deeper as exc:
            last = str(exc)
        except TowerTooShallow as exc:
            last = f"tower too shallow: {exc}"
        except SingularOperator as exc:
            wit = {"singular_cell": list(exc.cell) if exc.cell else None, "N": T.N}
            return TwistReport("descent.main", dict(params, N=T.N), 0, False, wit)
        except CellOverflow as exc:
            return TwistReport("descent.main", dict(params, N=T.N), 0, False, {"overflow": str(exc)})
    return TwistReport("descent.main", params, 0, False, {"unresolved": last, "max_N": S.N + max_extra_depth})


def _main_at(T, op, probes, extra, params):
    checked = 0
    for phi in probes:
        if not phi.is_rational_over(K_MAIN):
            raise ValueError("main-theorem probes must be K-rational")
        psi = op.apply(phi)
        checked += 1
        if not psi.is_rational_over(K_MAIN):
            wit = {"probe": phi.to_json(), "psi": psi.to_json(), "failed": "rationality"}
            return TwistReport("descent.main", params, checked, False, wit)
    for sigma in T.sigmas:
        if sigma.is_identity():
            continue
        res = operators_agree(GaloisConjugate(sigma, op), op, list(probes) + list(extra))
        checked += res.checked
        if not res.ok:
            wit = dict(res.witness, sigma=sigma.s, failed="galois")
            return TwistReport("descent.main", params, checked, False, wit)
    return TwistReport("descent.main", params, checked, True)


def word_depth(p, n, g, cell, N, limit=None):
    """Least depth M in [N, limit] at which W(g) maps the cell's atoms into cells of width <= M, else None."""
    limit = N + 1 if limit is None else limit
    j, k = cell
    for M in range(N, limit + 1):
        lam = cocycle_data(p, M).lam
        W = Weil(lam, g, M)
        try:
            if all(W.apply(a).k - W.apply(a).j <= M for a in cell_atoms(p, n, j, k, M)):
                return M
        except TowerTooShallow:
            continue
    return None


def tractable_words(p, n, N, cells, count=20, max_len=3, seed=0):
    """Distinct seeded random words of length <= max_len that stay within depth N+1 on every cell.

    Words needing a deeper tower are skipped (and listed) rather than run: the
    group-ring solves grow with the degree of Q(zeta_{4p^M}).
    """
    rng = random.Random(f"words:{p}:{n}:{seed}")
    words, rejected = [], []
    while len(words) < count:
        text, g = random_word(n, rng.randint(1, max_len), rng, p)
        if text in words or text in rejected:
            continue
        if all(word_depth(p, n, g, cell, N) is not None for cell in cells):
            words.append(text)
        else:
            rejected.append(text)
        if len(rejected) > 20 * count:
            raise RuntimeError("too many intractable words; lower max_len")
    return words, rejected
