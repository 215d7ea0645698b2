"""Command-line harness: verify suites, apply single operators, and print derived data."""

from __future__ import annotations

import argparse
import json
import re
import sys
from fractions import Fraction
from math import gcd

from .cocycle import build_delta, cocycle_data, norm_of, norm_solve, transversal
from .cyclo import tower
from .errors import SearchExhausted, WeilError
from .localfield import std_character
from .rep import Compose, Identity, Schrodinger, Weil, WeilInverse
from .schwartz import SchwartzFunction, atom
from .suites import SUITE_NAMES, RunConfig, UsageError, render_text, run_suite
from .sympl import bruhat_siegel, parse_heisenberg, parse_word

__all__ = ["main", "parse_expr", "parse_function", "ParseError"]


class ParseError(ValueError):
    def __init__(self, msg, pos):
        super().__init__(f"{msg} (at position {pos})")
        self.pos = pos


def _split_top(text, sep):
    """Split on sep outside parentheses; yields (piece, offset)."""
    depth, start = 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced ')'", i)
        elif ch == sep and depth == 0:
            yield text[start:i], start
            start = i + 1
    if depth:
        raise ParseError("unbalanced '('", len(text))
    yield text[start:], start


_FACTOR = re.compile(r"\s*([A-Za-z_]+)\s*(?:\((.*)\))?\s*", re.S)


def parse_expr(text, p, n, N):
    """An operator product such as 'W(tau1)*S(y(1/3),0)'; the rightmost factor acts first."""
    lam = std_character(p)
    ops = []
    for piece, pos in _split_top(text, "*"):
        m = _FACTOR.fullmatch(piece)
        if not m:
            raise ParseError(f"cannot parse factor {piece.strip()!r}", pos)
        name, arg = m.group(1), m.group(2)
        try:
            ops.append(_factor(name, arg, lam, p, n, N))
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(str(exc), pos) from None
    return ops[0] if len(ops) == 1 else Compose(ops)


def _factor(name, arg, lam, p, n, N):
    if name in ("alpha", "alpha_inv"):
        if arg:
            raise ValueError(f"{name} takes no argument")
        from .descent import splitting

        S = splitting(p, N, n)
        return S.alpha if name == "alpha" else S.B
    if arg is None:
        if name in ("id", "I"):
            return Identity()
        raise ValueError(f"{name} needs an argument")
    if name == "W":
        return Weil(lam, parse_word(arg, n), N)
    if name == "Winv":
        return WeilInverse(lam, parse_word(arg, n), N)
    if name == "S":
        return Schrodinger(lam, parse_heisenberg(arg, n), N)
    if name in ("delta", "delta_inv"):
        d = build_delta(int(arg), p, N, n)
        if name == "delta":
            return d
        from .cocycle import Delta

        return Delta(d.data, d.sigma, n, inverse=True)
    raise ValueError(f"unknown operator {name!r}; use W, Winv, S, delta, delta_inv, alpha, alpha_inv")


_TERM = re.compile(r"\s*(?:([+-]?\s*[0-9/]+)\s*\*)?\s*([+-]?)\s*atom\(([^()]*)\)\s*")


def parse_function(text, p, n, N):
    """A sum of rational multiples of atoms: '2*atom(0,1) - atom(1/3,0)'; the last atom argument is k."""
    # turn binary minus into '+-' so terms split on '+'
    norm = re.sub(r"(?<=[)\d])\s*-\s*", "+-", text)
    out = SchwartzFunction.zero(p, n, N)
    for piece, pos in _split_top(norm, "+"):
        if not piece.strip():
            continue
        m = _TERM.fullmatch(piece)
        if not m:
            raise ParseError(f"cannot parse term {piece.strip()!r}; expected [coef*]atom(c1,...,cn,k)", pos)
        coef = Fraction(m.group(1).replace(" ", "")) if m.group(1) else Fraction(1)
        if m.group(2) == "-":
            coef = -coef
        args = [a.strip() for a in m.group(3).split(",")]
        if len(args) != n + 1:
            raise ParseError(f"atom needs {n} coordinate(s) and k, got {len(args)} argument(s)", pos)
        try:
            f = atom(p, tuple(Fraction(a) for a in args[:-1]), int(args[-1]), N)
        except ValueError as exc:
            raise ParseError(str(exc), pos) from None
        out = out + f.scale(tower(p, N).scalar(coef))
    return out


def show_value(v, p):
    """Rationals as a/b, q*sqrt(p), roots of unity as zeta_m^e, else a polynomial in the primitive root."""
    if v.is_rational():
        return str(v.rational_value())
    r = v * v.tower.sqrt_p.inverse()
    if r.is_rational():
        q = r.rational_value()
        return f"sqrt({p})" if q == 1 else f"{q}*sqrt({p})"
    tw = v.tower
    for e in range(tw.m):
        if v == tw.root(e):
            g = gcd(e, tw.m)
            return f"zeta_{tw.m // g}^{e // g}"
    return str(v)


def render_function(f: SchwartzFunction):
    p = f.p
    if f.is_zero():
        return "0"
    lines = [f"cell j={f.j} k={f.k} (cosets x + {p}^{f.k} O^{f.n})"]
    for label, v in zip(f.to_json()["table"], (f.table[k] for k in sorted(f.table))):
        lines.append(f"  x = {label}: {show_value(v, p)}")
    return "\n".join(lines)


# -- argument handling ------------------------------------------------------------------


def _cell(text):
    try:
        j, k = (int(a) for a in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"cell must be 'j,k', got {text!r}") from None
    return [j, k]


def _common(sp):
    sp.add_argument("--p", type=int, default=3, help="odd prime (default 3)")
    sp.add_argument("--n", type=int, default=1, help="half the symplectic dimension (default 1)")
    sp.add_argument("--N", type=int, default=2, help="tower depth: values in Q(zeta_{4p^N}) (default 2)")
    sp.add_argument("--format", choices=("json", "text"), default="text")
    sp.add_argument("--out", help="write the output to this file instead of stdout")


def build_parser():
    ap = argparse.ArgumentParser(prog="weildescent", description="Exact Weil representation computations over cyclotomic fields.")
    sub = ap.add_subparsers(dest="verb", required=True)

    v = sub.add_parser("verify", help="run verification suites; exit 0 iff every check passes")
    _common(v)
    v.add_argument("--cell", type=_cell, action="append", help="working cell j,k (repeatable; default 0,1)")
    v.add_argument("--suite", action="append", choices=SUITE_NAMES + ("all",), help="suite to run (repeatable)")
    v.add_argument("--probes", choices=("atoms", "mixed"), default="atoms")
    v.add_argument("--jobs", type=int, default=1)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--words", type=int, default=20, help="random words per word-based suite")

    c = sub.add_parser("compute", help="apply an operator product to a function")
    _common(c)
    c.add_argument("expr", help="e.g. 'W(tau1)', 'Winv(g(3))*S(y(1/3),0)', 'alpha*W(iota)*alpha_inv'")
    c.add_argument("function", help="e.g. 'atom(0,0)' or '2*atom(0,1) - atom(1/3,0)'")

    ns = sub.add_parser("norm-solve", help="find u with norm -1 from Q(zeta_p, i) down to Q(sqrt p, sqrt -p)")
    _common(ns)
    ns.add_argument("--bound", type=int, default=1)

    d = sub.add_parser("decompose", help="Bruhat-Siegel decomposition of a word")
    _common(d)
    d.add_argument("word")

    ds = sub.add_parser("describe", help="print delta(sigma), the splitting, or the cocycle data")
    _common(ds)
    ds.add_argument("what", choices=("delta", "alpha", "cocycle", "transversal"))
    ds.add_argument("--sigma", type=int, help="exponent s of sigma_s (for delta)")
    return ap


def _emit(args, payload, text):
    out = json.dumps(payload, sort_keys=True, indent=2) if args.format == "json" else text
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out + "\n")
    else:
        print(out)


def _verify(args):
    suites = args.suite or ["measures"]
    if "all" in suites:
        suites = list(SUITE_NAMES)
    cfg = RunConfig(p=args.p, n=args.n, N=args.N, cells=args.cell or [[0, 1]], probes=args.probes,
                    suites=suites, seed=args.seed, words=args.words, jobs=args.jobs)
    cfg.validate()
    report = run_suite(cfg)
    _emit(args, report, render_text(report))
    return 0 if report["summary"]["failed"] == 0 else 1


def _check_p(args):
    RunConfig(p=args.p, n=args.n, N=args.N).validate()


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.verb == "verify":
            return _verify(args)
        _check_p(args)
        if args.verb == "compute":
            op = parse_expr(args.expr, args.p, args.n, args.N)
            phi = parse_function(args.function, args.p, args.n, args.N)
            psi = op.apply(phi)
            _emit(args, psi.to_json(), render_function(psi))
        elif args.verb == "norm-solve":
            u = norm_solve(args.p, args.N, args.bound)
            nu = norm_of(u.lift(args.N), args.p)
            _emit(args, {"u": u.to_json(), "norm": nu.to_json()}, f"u = {u}\nnorm(u) = {show_value(nu, args.p)}")
        elif args.verb == "decompose":
            dec = bruhat_siegel(parse_word(args.word, args.n), args.p).to_json()
            _emit(args, dec, json.dumps(dec, sort_keys=True, indent=2))
        elif args.verb == "describe":
            payload = _describe(args)
            _emit(args, payload, json.dumps(payload, sort_keys=True, indent=2))
    except (UsageError, ParseError) as exc:
        ap.exit(2, f"weildescent: error: {exc}\n")
    except SearchExhausted as exc:
        print(f"weildescent: {exc}", file=sys.stderr)
        return 1
    except WeilError as exc:
        print(f"weildescent: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def _describe(args):
    p, n, N = args.p, args.n, args.N
    if args.what == "delta":
        if args.sigma is None:
            raise UsageError("describe delta needs --sigma")
        return build_delta(args.sigma, p, N, n).to_json()
    if args.what == "alpha":
        from .descent import splitting

        return splitting(p, N, n).to_json()
    if args.what == "transversal":
        return {"p": p, "N": N, "exponents": [s.s for s in transversal(p, N)]}
    return cocycle_data(p, N).to_json()


if __name__ == "__main__":
    sys.exit(main())
