"""Run the acceptance configurations and write one JSON report per configuration.

    python scripts/run_acceptance.py --out reports/ [--jobs 4] [--skip-slow]
"""

import argparse
import json
import pathlib
import time

from weildescent.suites import RunConfig, run_suite

CONFIGS = [
    ("measures", [dict(p=p, suites=["measures"]) for p in (3, 5, 7)]),
    ("stone-von-neumann", [dict(p=p, n=n, suites=["stone-von-neumann"]) for p in (3, 5) for n in (1, 2)]),
    ("modes", [dict(p=3, n=n, suites=["modes"]) for n in (1, 2)]),
    ("intertwining", [dict(p=p, suites=["intertwining"]) for p in (3, 5)]),
    ("twists", [dict(p=p, suites=["twists"]) for p in (3, 5)]),
    ("cocycle", [dict(p=p, suites=["cocycle"]) for p in (3, 5)]),
    ("descent", [dict(p=p, suites=["descent", "main-theorem"], cells=[[0, 1], [-1, 1]]) for p in (3, 5)]),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="reports")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--skip-slow", action="store_true", help="leave out the splitting and main-theorem runs")
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failures = 0
    for label, configs in CONFIGS:
        if args.skip_slow and label == "descent":
            continue
        for kw in configs:
            start = time.perf_counter()
            report = run_suite(RunConfig(jobs=args.jobs, **kw))
            s = report["summary"]
            name = f"{label}-p{kw['p']}-n{kw.get('n', 1)}.json"
            (out / name).write_text(json.dumps(report, sort_keys=True, indent=1))
            failures += s["failed"]
            print(f"{name:32s} {s['passed']:5d}/{s['total']:<5d} {time.perf_counter() - start:7.1f}s")
    print("all checks passed" if not failures else f"{failures} checks failed")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
