"""Search for u in Q(zeta_p, i) with norm -1 to Q(sqrt p, sqrt -p), for several primes.

    python scripts/norm_search.py 3 5 7 13 17 41 --bound 1
"""

import argparse
import time

from weildescent.cocycle import norm_of, norm_solve
from weildescent.errors import SearchExhausted


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("primes", type=int, nargs="+")
    ap.add_argument("--bound", type=int, default=1, help="exponent range [-bound, bound] for each generator")
    args = ap.parse_args()
    for p in args.primes:
        start = time.perf_counter()
        try:
            u = norm_solve(p, 1, args.bound)
            verdict = f"u = {u}  (norm {norm_of(u, p)})"
        except SearchExhausted as exc:
            verdict = f"not found: {exc}"
        print(f"p = {p:3d}  {time.perf_counter() - start:6.1f}s  {verdict}")


if __name__ == "__main__":
    main()
