"""Sobol indices and output density for the advection-diffusion QoI."""
import argparse

from amisc.studio.study import StudyConfig, build_surrogate, density_report, sobol_report


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--wmax", type=float, default=5.0)
    parser.add_argument("--n-kle", type=int, default=4)
    parser.add_argument("--out", default="results/sensitivity")
    args = parser.parse_args()
    cfg = StudyConfig(model="advection_diffusion", model_config={"n_kle": args.n_kle, "max_level": 4},
                      w_max=args.wmax, out=args.out)
    _, state = build_surrogate(cfg)
    print(sobol_report(cfg, state).read_text())
    print("density table:", density_report(cfg, state))


if __name__ == "__main__":
    main()
