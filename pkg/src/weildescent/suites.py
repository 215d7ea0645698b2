"""Verification suites: a run configuration, a deterministic task plan, and the report.

A suite expands into tasks, each a (function name, keyword arguments) pair of
plain JSON values, so tasks can be shipped to worker processes.  Every task
returns TwistReports; the report sorts records by name and parameters, so its
content does not depend on execution order.
"""

from __future__ import annotations

import json
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from . import __version__
from .cocycle import (
    cocycle_check,
    cocycle_data,
    delta_fixed_check,
    sigma_compose,
    sigma_decompose,
    teichmuller_eps,
    transversal,
)
from .cyclo import GaloisElement, fixing_group, is_prime, legendre, tower
from .errors import TowerTooShallow
from .descent import certificate_check, main_theorem_check, split_check, splitting, tractable_words
from .localfield import abs_sqrt, char_eval, lattice_measure, std_character, valuation
from .rep import Compose, Schrodinger, Weil, intertwine_check, operators_agree
from .schwartz import SchwartzFunction, cell_atoms, cell_keys
from .sympl import HeisenbergElement, generator_words, heisenberg_generators, parse_word, random_word
from .twists import (
    TwistReport,
    g_t_fixed,
    default_probes,
    frak_g,
    character_twist_measure,
    dilation_measure,
    measure_rationality,
    galois_transport,
    dilation_twist,
    galois_twist,
    galois_conjugation,
)

__all__ = ["RunConfig", "SUITE_NAMES", "plan", "run_suite", "render_text", "naive_fourier", "sqrt_p_oracle"]

SUITE_NAMES = (
    "measures",
    "stone-von-neumann",
    "modes",
    "intertwining",
    "twists",
    "cocycle",
    "descent",
    "main-theorem",
)


class UsageError(ValueError):
    """Invalid configuration, raised before any computation."""


@dataclass
class RunConfig:
    p: int = 3
    n: int = 1
    N: int = 2
    cells: list = field(default_factory=lambda: [[0, 1]])
    probes: str = "atoms"
    suites: list = field(default_factory=lambda: ["measures"])
    seed: int = 0
    words: int = 20
    jobs: int = 1

    def validate(self):
        if not isinstance(self.p, int) or not is_prime(self.p):
            raise UsageError(f"p must be a prime, got {self.p}")
        if self.p == 2:
            raise UsageError("p = 2 is excluded")
        if self.n < 1:
            raise UsageError(f"n must be >= 1, got {self.n}")
        if self.N < 1:
            raise UsageError(f"N must be >= 1, got {self.N}")
        for j, k in self.cells:
            if j > k:
                raise UsageError(f"cell ({j},{k}) needs j <= k")
        if self.probes not in ("atoms", "mixed"):
            raise UsageError(f"probes must be 'atoms' or 'mixed', got {self.probes!r}")
        unknown = [s for s in self.suites if s not in SUITE_NAMES]
        if unknown:
            raise UsageError(f"unknown suite(s) {unknown}; choose from {list(SUITE_NAMES)}")
        if self.jobs < 1:
            raise UsageError("jobs must be >= 1")
        return self

    def echo(self):
        out = asdict(self)
        out.pop("jobs")
        out["cells"] = [list(c) for c in self.cells]
        return out


# -- oracles ------------------------------------------------------------------------------


def sqrt_p_oracle(p, N):
    """sqrt(p) from the quadratic Gauss sum, written out term by term."""
    tw = tower(p, N)
    g = tw.zero
    for a in range(1, p):
        g = g + tw.zeta(p, a) * legendre(a, p)
    root = g if p % 4 == 1 else -(tw.zeta(4) * g)
    assert root * root == p
    return root


def _oracle_power(p, N, e):
    r = sqrt_p_oracle(p, N)
    out = tower(p, N).one
    for _ in range(abs(e)):
        out = out * r
    return out if e >= 0 else out.inverse()


def naive_fourier(phi, lam, N):
    """(F phi)(y) = sum over the cosets x of phi's cell of phi(x) lambda(x y) vol, for n = 1."""
    p = phi.p
    j, k = phi.j, phi.k
    l = lam.level
    vol = lattice_measure(lam, k, N)
    j2, k2 = l - k, l - j
    pj, pj2 = Fraction(p) ** j, Fraction(p) ** j2
    table = {}
    for (c2,) in cell_keys(p, 1, j2, k2):
        y = c2 * pj2
        acc = tower(p, N).zero
        for (c,), v in phi.table.items():
            acc = acc + v * char_eval(lam, c * pj * y, N)
        table[(c2,)] = acc * vol
    return SchwartzFunction(p, 1, j2, k2, table, N)


# -- tasks ---------------------------------------------------------------------------------


def _report(name, params, ok, witness=None, probes=0):
    return TwistReport(name, params, probes, ok, None if ok else (witness or {}))


def t_lattice_volume(p, level, N=2):
    lam = std_character(p).twist(Fraction(p) ** (-level))
    got = lattice_measure(lam, 0, N)
    want = _oracle_power(p, N, level)
    return [_report("measures.lattice_volume", {"p": p, "level": level}, got == want and lam.level == level,
                    {"got": got.to_json(), "want": want.to_json(), "level": lam.level})]


def t_twist_measure(p, s, level, k, N=2):
    s = Fraction(s)
    lam = std_character(p).twist(Fraction(p) ** (-level))
    got = lattice_measure(lam.twist(s), k, N)
    want = _oracle_power(p, N, -valuation(s, p)) * lattice_measure(lam, k, N)
    params = {"p": p, "s": str(s), "level": level, "k": k}
    return [_report("measures.twist", params, got == want, {"got": got.to_json(), "want": want.to_json()})]


def t_additivity(p, level, k, N=2):
    lam = std_character(p).twist(Fraction(p) ** (-level))
    whole = lattice_measure(lam, k, N)
    parts = tower(p, N).zero
    for _ in range(p):
        parts = parts + lattice_measure(lam, k + 1, N)
    return [_report("measures.additivity", {"p": p, "level": level, "k": k}, whole == parts,
                    {"whole": whole.to_json(), "parts": parts.to_json()})]


def t_fourier(p, level, j, k, seed, N=2):
    lam = std_character(p).twist(Fraction(p) ** (-level))
    rng = random.Random(f"fourier:{p}:{level}:{j}:{k}:{seed}")
    tw = tower(p, N)
    table = {key: tw.root(rng.randrange(tw.m)) * rng.randint(1, 3) for key in cell_keys(p, 1, j, k) if rng.random() < 0.6}
    phi = SchwartzFunction(p, 1, j, k, table, N)
    twice = naive_fourier(naive_fourier(phi, lam, N), lam, N)
    width = p ** (phi.k - phi.j)
    refl = SchwartzFunction(p, 1, phi.j, phi.k, {((-c) % width,): v for (c,), v in phi.table.items()}, N)
    params = {"p": p, "level": level, "cell": [j, k], "seed": seed}
    return [_report("measures.fourier-inversion", params, twice == refl,
                    {"probe": phi.to_json(), "twice": twice.to_json()}, 1)]


def _probes(p, n, cell, N, mode, seed=0, limit=None):
    """Atoms of the cell (a seeded sample of `limit` of them if given), plus mixed combinations."""
    probes = default_probes(p, n, tuple(cell), N, extra=3, seed=seed)
    count = p ** (n * (cell[1] - cell[0]))
    atoms, mixed = probes[:count], probes[count:]
    if limit is not None and count > limit:
        atoms = random.Random(f"sample:{p}:{n}:{cell}:{seed}").sample(atoms, limit)
    return atoms if mode == "atoms" else atoms + mixed


def t_measure_twists(p, n, word, N):
    lam = std_character(p)
    g = parse_word(word, n)
    out = [measure_rationality(lam, g, N)]
    for s in (p, Fraction(1, p), 2):
        out.append(character_twist_measure(lam, g, s, N))
        out.append(dilation_measure(lam, g, s, N))
    return out


def _random_heis(rng, n, p):
    vals = [Fraction(0), Fraction(1), Fraction(-1), Fraction(2), Fraction(1, p), Fraction(p)]
    return HeisenbergElement(tuple(rng.choice(vals) for _ in range(2 * n)), rng.choice(vals))


_SVN_ATOMS = 8


def t_svn(p, n, N, index, seed, cells, probes):
    rng = random.Random(f"svn:{p}:{n}:{seed}:{index}")
    lam = std_character(p)
    h1, h2 = _random_heis(rng, n, p), _random_heis(rng, n, p)
    phis = [phi for cell in cells for phi in _probes(p, n, cell, N, probes, seed, limit=_SVN_ATOMS)]
    lhs = Compose([Schrodinger(lam, h1, N), Schrodinger(lam, h2, N)])
    res = operators_agree(lhs, Schrodinger(lam, h1 * h2, N), phis)
    params = {"h1": h1.to_json(), "h2": h2.to_json(), "n": n}
    out = [_report("svn.product", params, res.ok, res.witness, res.checked)]
    z = HeisenbergElement((Fraction(0),) * (2 * n), h1.t)
    bad = None
    for phi in phis:
        if Schrodinger(lam, z, N).apply(phi) != phi.scale(char_eval(lam, h1.t, N)):
            bad = {"probe": phi.to_json(), "t": str(h1.t)}
            break
    out.append(_report("svn.central", {"t": str(h1.t), "n": n, "index": index}, bad is None, bad, len(phis)))
    return out


def _random_atom(rng, p, n, N):
    j, k = rng.choice([(0, 1), (-1, 1), (0, 2), (1, 2)])
    key = tuple(rng.randrange(p ** (k - j)) for _ in range(n))
    return SchwartzFunction(p, n, j, k, {key: tower(p, N).one}, N)


def t_modes(p, n, N, index, seed):
    """One random (word, atom) pair; pairs needing a tower beyond the degree cap are redrawn."""
    rng = random.Random(f"modes:{p}:{n}:{seed}:{index}")
    lam = std_character(p)
    skipped = []
    while len(skipped) < 50:
        text, g = random_word(n, rng.randint(1, 3), rng, p)
        atom = _random_atom(rng, p, n, N)
        depth = N
        while _affordable(p, depth):
            phi = atom.lift(depth)
            try:
                res = operators_agree(Weil(lam, g, depth, "direct"), Weil(lam, g, depth, "composed"), [phi])
            except TowerTooShallow as exc:
                depth = max(exc.needed, depth + 1)
                continue
            params = {"g": text, "n": n, "index": index, "atom": atom.to_json(), "depth": depth, "skipped": skipped}
            return [_report("modes.agree", params, res.ok, res.witness, res.checked)]
        skipped.append(text)
    raise RuntimeError("no affordable (word, atom) pair found")


def t_intertwine(p, n, N, word, cells, probes, seed):
    lam = std_character(p)
    g = parse_word(word, n)
    phis = [phi for cell in cells for phi in _probes(p, n, cell, N, probes, seed)]
    out = []
    for h in heisenberg_generators(n, p):
        res = intertwine_check(lam, g, h, phis, N)
        out.append(_report("intertwining", {"g": word, "h": h.to_json()}, res.ok, res.witness, res.checked))
    return out


def _sigmas(p, N, which):
    if which == "sqrt_p":
        return [GaloisElement(p, N, s) for s in fixing_group(p, N, "Q(sqrt p)")]
    return [GaloisElement(p, N, s) for s in frak_g(p, N)]


def t_twists(p, n, N, word, cells, probes, seed):
    lam = std_character(p)
    g = parse_word(word, n)
    phis = [phi for cell in cells for phi in _probes(p, n, cell, N, probes, seed)]
    out = []
    for s in (p, Fraction(1, p), 2, teichmuller_eps(p, N)):
        out.append(dilation_twist(lam, g, s, N, phis))
    for sigma in _sigmas(p, N, "sqrt_p"):
        out.append(galois_twist(lam, g, sigma, N, phis))
        out.append(galois_transport(lam, g, sigma, N, phis))
    for sigma in _sigmas(p, N, "frak_g"):
        out.append(galois_conjugation(lam, g, sigma, N, phis))
    return [_with_word(r, word) for r in out]


def _with_word(r, word):
    r.params = dict(r.params, g=word)
    return r


def t_g_t_fixed(p, n, N, t, cells, probes, seed):
    lam = std_character(p)
    phis = [phi for cell in cells for phi in _probes(p, n, cell, N, probes, seed)]
    return [g_t_fixed(lam, Fraction(t), sigma, N, phis, n=n) for sigma in _sigmas(p, N, "frak_g")]


def t_cocycle(p, n, N, sigma, cells, probes, seed, conj_words):
    data = cocycle_data(p, N)
    phis = [phi for cell in cells for phi in _probes(p, n, cell, N, probes, seed)]
    sig = GaloisElement(p, N, sigma)
    out = []
    for k, tau in enumerate(transversal(p, N)):
        gs = [parse_word(w, n) for w in conj_words] if k == 0 else ()
        out.extend(cocycle_check(sig, tau, phis, gs, data))
    return out


def t_regimes(p, N):
    """Every branch of the defect identities that the index range allows occurs among transversal pairs.

    For p = 3 the index i only takes the value 1, so every composition wraps.
    """
    sig = transversal(p, N)
    seen = set()
    for a in sig:
        for b in sig:
            _, wrapped = sigma_compose(sigma_decompose(a, p, N), sigma_decompose(b, p, N))
            seen.add(wrapped)
    possible = {True} if p == 3 else {True, False}
    params = {"p": p, "N": N, "seen": sorted(seen)}
    return [_report("cocycle.regimes", params, seen == possible, {"possible": sorted(possible)})]


def t_delta_fixed(p, n, N, cells):
    data = cocycle_data(p, N)
    return [delta_fixed_check(phi, data) for cell in cells for phi in cell_atoms(p, n, cell[0], cell[1], N)]


def t_descent(p, n, N, cell, probes, seed):
    S = splitting(p, N, n)
    S.ensure_cell(tuple(cell))
    phis = _probes(p, n, cell, N, probes, seed)
    out = []
    for sigma in S.sigmas:
        for r in (certificate_check(S, sigma, phis), split_check(S, sigma, phis)):
            r.params = dict(r.params, cell=list(cell))
            out.append(r)
    return out


def t_main(p, n, N, word, cell, probes, seed):
    g = parse_word(word, n)
    j, k = cell
    out = []
    for level in (N, N + 1):
        S = splitting(p, level, n)
        atoms = cell_atoms(p, n, j, k, level)
        extra = _probes(p, n, cell, level, "mixed", seed)[len(atoms):] if probes == "mixed" else []
        r = main_theorem_check(S, g, atoms, extra, cell=cell)
        r.params = dict(r.params, g=word, base_N=level)
        out.append(r)
    a, b = out
    out.append(_report("descent.stable", {"g": word, "cell": list(cell), "N": N}, a.ok == b.ok,
                       {"at_N": a.ok, "at_N_plus_1": b.ok}))
    return out


def t_word_selection(p, n, N, cells, count, seed):
    words, rejected = tractable_words(p, n, N, [tuple(c) for c in cells], count, seed=seed)
    return [_report("descent.word-selection", {"words": words, "rejected": rejected}, True)]


TASKS = {
    "lattice_volume": t_lattice_volume,
    "twist_measure": t_twist_measure,
    "additivity": t_additivity,
    "fourier": t_fourier,
    "measure_twists": t_measure_twists,
    "svn": t_svn,
    "modes": t_modes,
    "intertwine": t_intertwine,
    "twists": t_twists,
    "g_t_fixed": t_g_t_fixed,
    "cocycle": t_cocycle,
    "delta_fixed": t_delta_fixed,
    "regimes": t_regimes,
    "descent": t_descent,
    "main": t_main,
    "word_selection": t_word_selection,
}

CONJ_WORDS = ("tau1", "levi(2)", "unip(1/{p})", "g({p})")


def plan(cfg: RunConfig) -> list:
    """The ordered task list for the configured suites."""
    p, n, N, seed = cfg.p, cfg.n, cfg.N, cfg.seed
    cells = [list(c) for c in cfg.cells]
    common = {"cells": cells, "probes": cfg.probes, "seed": seed}
    gens = generator_words(n, p)
    rng = random.Random(f"plan:{p}:{n}:{seed}")
    words = [random_word(n, rng.randint(1, 3), rng, p)[0] for _ in range(cfg.words)]
    tasks, seen = [], set()

    def add(suite, fn, kwargs):
        # a task shared by two suites runs once, credited to the first
        key = (fn, json.dumps(kwargs, sort_keys=True))
        if key not in seen:
            seen.add(key)
            tasks.append((suite, fn, kwargs))

    for suite in cfg.suites:
        if suite == "measures":
            for level in range(-2, 3):
                add(suite, "lattice_volume", {"p": p, "level": level, "N": N})
                for k in range(-2, 3):
                    add(suite, "additivity", {"p": p, "level": level, "k": k, "N": N})
                    for s in (str(p), f"1/{p}", "2", str(p * p), "-1"):
                        add(suite, "twist_measure", {"p": p, "s": s, "level": level, "k": k, "N": N})
                for j in range(-2, 3):
                    for k in range(j, min(j + 2, 2) + 1):
                        add(suite, "fourier", {"p": p, "level": level, "j": j, "k": k, "seed": seed, "N": N})
            for w in gens:
                add(suite, "measure_twists", {"p": p, "n": n, "word": w, "N": N})
        elif suite == "stone-von-neumann":
            for i in range(100):
                add(suite, "svn", dict(common, p=p, n=n, N=N, index=i))
        elif suite == "modes":
            for i in range(100 if n == 1 else 20):
                add(suite, "modes", {"p": p, "n": n, "N": N, "index": i, "seed": seed})
        elif suite == "intertwining":
            for w in gens + words:
                add(suite, "intertwine", dict(common, p=p, n=n, N=N, word=w))
        elif suite == "twists":
            for w in gens:
                add(suite, "twists", dict(common, p=p, n=n, N=N, word=w))
                add(suite, "measure_twists", {"p": p, "n": n, "word": w, "N": N})
            for t in ("2", "-1", str(p), f"1/{p}"):
                add(suite, "g_t_fixed", dict(common, p=p, n=n, N=N, t=t))
        elif suite == "cocycle":
            conjugation = [w.format(p=p) for w in CONJ_WORDS] if n == 1 else ["tau1", f"g({p})"]
            for sigma in transversal(p, N):
                add(suite, "cocycle", dict(common, p=p, n=n, N=N, sigma=sigma.s, conj_words=conjugation))
            add(suite, "delta_fixed", {"p": p, "n": n, "N": N, "cells": cells})
            add(suite, "regimes", {"p": p, "N": N})
        elif suite == "descent":
            for cell in cells:
                add(suite, "descent", {"p": p, "n": n, "N": N, "cell": cell, "probes": cfg.probes, "seed": seed})
        elif suite == "main-theorem":
            chosen, _ = tractable_words(p, n, N, [tuple(c) for c in cells], cfg.words, seed=seed)
            add(suite, "word_selection", {"p": p, "n": n, "N": N, "cells": cells, "count": cfg.words, "seed": seed})
            for cell in cells:
                for w in ["id"] + gens + chosen:
                    add(suite, "main", {"p": p, "n": n, "N": N, "word": w, "cell": cell, "probes": cfg.probes, "seed": seed})
    return tasks


_FIXED_DEPTH = ("descent", "main", "word_selection", "modes")
_MAX_DEGREE = 2000


def _affordable(p, depth):
    return (p - 1) * 2 * p ** (depth - 1) <= _MAX_DEGREE


def _crash(fn_name, kwargs, exc):
    return TwistReport(f"error.{fn_name}", kwargs, 0, False, {"exception": f"{type(exc).__name__}: {exc}"})


def execute(task):
    """Run one (suite, function, kwargs) task; returns record dicts with timings in milliseconds."""
    suite, fn_name, kwargs = task
    start = time.perf_counter()
    depth = kwargs.get("N")
    while True:
        try:
            reports = TASKS[fn_name](**dict(kwargs, N=depth) if depth else kwargs)
        except TowerTooShallow as exc:
            # values needing deeper roots of unity are recomputed in a deeper tower
            if fn_name in _FIXED_DEPTH or depth is None or not _affordable(kwargs["p"], exc.needed):
                reports = [_crash(fn_name, kwargs, exc)]
            else:
                depth = exc.needed
                continue
        except Exception as exc:  # a crash is a failed check with the task as witness
            reports = [_crash(fn_name, kwargs, exc)]
        break
    if depth and depth != kwargs["N"]:
        for r in reports:
            r.params = dict(r.params, depth=depth)
    ms = int((time.perf_counter() - start) * 1000)
    out = []
    for r in reports:
        rec = r.to_json()
        rec["suite"] = suite
        rec["timing_ms"] = ms
        out.append(rec)
    return out


def run_suite(cfg: RunConfig) -> dict:
    """Execute the plan (in worker processes when jobs > 1) and assemble the report."""
    cfg.validate()
    tasks = plan(cfg)
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunks = list(pool.map(execute, tasks))
    else:
        chunks = [execute(t) for t in tasks]
    records = [rec for chunk in chunks for rec in chunk]
    records.sort(key=lambda r: (r["name"], json.dumps(r["params"], sort_keys=True)))
    by_suite = {}
    for r in records:
        entry = by_suite.setdefault(r["suite"], {"passed": 0, "failed": 0})
        entry["passed" if r["pass"] else "failed"] += 1
    passed = sum(r["pass"] for r in records)
    return {
        "artifact": {"name": "weildescent", "version": __version__},
        "config": cfg.echo(),
        "checks": records,
        "summary": {"total": len(records), "passed": passed, "failed": len(records) - passed, "by_suite": by_suite},
    }


def render_text(report: dict) -> str:
    lines = []
    for r in report["checks"]:
        tag = "PASS" if r["pass"] else "FAIL"
        lines.append(f"{tag} {r['name']} {json.dumps(r['params'], sort_keys=True)}")
    s = report["summary"]
    lines.append(f"{s['passed']}/{s['total']} checks passed")
    return "\n".join(lines)
