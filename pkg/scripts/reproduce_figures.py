"""Write plot-ready CSVs for the three figure studies plus the optimum and trade-off tables.

    python scripts/reproduce_figures.py --out results/ --chi 0.1
"""
import argparse
import os

import numpy as np

from herald_sim.analysis import (
    PRESETS,
    optimize_eta_ref,
    sweep,
    tradeoff_curve,
)
from herald_sim.cli import render
from herald_sim.detector import DetectorParams


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--chi", type=float, default=0.1)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    for name, make in PRESETS.items():
        res = sweep(make(args.chi), timestamp=False)
        path = os.path.join(args.out, f"{name}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(render(res.records(), "csv"))
        print(f"{path}: {len(res.points)} rows (chi={args.chi})")

    rows = []
    for dark in np.geomspace(1e-9, 1e-3, 13):
        rep = optimize_eta_ref(args.chi, DetectorParams(0.0, float(dark)))
        rows.append(rep.as_record())
    path = os.path.join(args.out, "optimum_vs_dark.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render(rows, "csv"))
    print(f"{path}: {len(rows)} rows")

    curve = tradeoff_curve(args.chi, DetectorParams(), np.linspace(0.01, 1.0, 100))
    path = os.path.join(args.out, "tradeoff.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render([p._asdict() for p in curve], "csv"))
    print(f"{path}: {len(curve)} rows")


if __name__ == "__main__":
    main()
