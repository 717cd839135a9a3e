"""QoI convergence of the advection-diffusion solver in h1, h2 and dt at z = 0.

Writes ``solver_convergence.csv`` with one row per (parameter, level): the
QoI, the difference to the previous level and the observed order.
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from amisc.adaptive import fmt
from amisc.models.advection import AdvectionDiffusionConfig, solve_qoi


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--finest", type=int, default=4)
    parser.add_argument("--n-kle", type=int, default=4)
    parser.add_argument("--out", default="results")
    args = parser.parse_args()
    cfg = AdvectionDiffusionConfig(n_kle=args.n_kle, max_level=args.finest)
    z = np.zeros(cfg.n_kle)
    rows = []
    for axis, name in enumerate(("h1", "h2", "dt")):
        values, prev_diff = [], None
        for level in range(args.finest + 1):
            alpha = [args.finest] * 3
            alpha[axis] = level
            values.append(solve_qoi(alpha, z, cfg))
            diff = abs(values[-1] - values[-2]) if level else float("nan")
            order = np.log2(prev_diff / diff) if prev_diff else float("nan")
            rows.append([name, level, fmt(values[-1]), fmt(diff), fmt(order)])
            print(f"{name} level {level}: qoi {values[-1]:.10f} diff {diff:.3e} order {order:.2f}")
            prev_diff = diff if level else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "solver_convergence.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["parameter", "level", "qoi", "difference", "order"])
        writer.writerows(rows)


if __name__ == "__main__":
    main()
