"""Validation error against work for single-fidelity, multi-level and multi-index
refinement on the desk-scale advection-diffusion ensemble.

Two panels: all strategies with the truth model on top (``--top 4``), and the
multi-level / multi-index pair with a coarser top model (``--top 3``) so both
traces saturate at its discretization floor.
"""
import argparse
import logging

from amisc.studio.study import StudyConfig, compare_study


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--top", type=int, default=4)
    parser.add_argument("--wmax", type=float, default=20.0)
    parser.add_argument("--kappa", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--strategies", default="single,multilevel,multiindex")
    parser.add_argument("--out", default="results/advection")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO)
    cfg = StudyConfig(
        model="advection_diffusion",
        model_config={"n_kle": 4, "max_level": 4},
        top_level=args.top,
        kappa=args.kappa,
        w_max=args.wmax,
        max_level=8,
        seed=args.seed,
        out=args.out,
        strategies=args.strategies.split(","),
    )
    for name, report in compare_study(cfg).items():
        last = report.rows[-1]
        print(f"{name:>10}: work {last['work']:.3f} error {last['error'][0]:.3e}")


if __name__ == "__main__":
    main()
