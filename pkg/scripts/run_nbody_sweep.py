#!/usr/bin/env python3
"""Reproduce the drift-versus-requirement table for the orbit benchmark.

For every requirement in --nsb and horizon in --years: tune the
five-body program, run it against the 500-bit reference, and record
the final Euclidean drift of each planet.  Writes summary.csv and the
per-step series files under --out and prints a table with one row per
requirement (distances in AU).
"""

import argparse

from bittune.nbody import BODY_ORDER, ExperimentPlan, run_experiment


def int_list(text: str):
    return tuple(int(t) for t in text.split(",") if t.strip())


def float_list(text: str):
    return tuple(float(t) for t in text.split(",") if t.strip())


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nsb", type=int_list, default=(11, 18, 24, 34, 43, 53))
    ap.add_argument("--years", type=float_list, default=(10.0,))
    ap.add_argument("--dt", default="0.01")
    ap.add_argument("--method", choices=("ilp", "pi"), default="ilp")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="bench-results")
    ap.add_argument("--no-series", action="store_true")
    args = ap.parse_args()

    plan = ExperimentPlan(nsb_values=args.nsb, horizons_years=args.years,
                          dt=args.dt, method=args.method,
                          write_series=not args.no_series, out_dir=args.out)
    rows = run_experiment(plan, jobs=args.jobs)

    planets = [b for b in BODY_ORDER if b != "Sun"]
    by_cell = {}
    for r in rows:
        by_cell.setdefault((r.horizon_years, r.nsb), {})[r.body] = r
    for years in args.years:
        print(f"horizon {years:g} years")
        print(f"{'nsb':>4}" + "".join(f"{b:>12}" for b in planets)
              + f"{'tune s':>9}{'run s':>9}")
        for req in args.nsb:
            cell = by_cell[(years, req)]
            dists = "".join(f"{cell[b].distance_au:>12.3e}" for b in planets)
            any_row = cell[planets[0]]
            print(f"{req:>4}{dists}{any_row.tune_seconds:>9.2f}"
                  f"{any_row.run_seconds:>9.2f}")
    print(f"wrote {args.out}/summary.csv")


if __name__ == "__main__":
    main()
