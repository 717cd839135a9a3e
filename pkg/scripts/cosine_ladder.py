"""Adaptive multi-index surrogate of the three-model cosine ladder.

Prints the accepted indices with their coefficients, the per-model sample
allocation and the error of the combined surrogate against every constituent
tensor interpolant.
"""
import argparse

import numpy as np

from amisc.adaptive import allocation_profile, amisc_run
from amisc.combi import format_index_set
from amisc.models import cosine_ladder
from amisc.tensorgrid import tensor_eval


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--wmax", type=float, default=20.0)
    parser.add_argument("--kappa", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    ens = cosine_ladder()
    state, trace = amisc_run(ens, kappa=args.kappa, w_max=args.wmax, max_level=6)
    print("accepted (alpha beta, coefficient):")
    print(format_index_set(state.accepted, state.coefficients), end="")
    print(f"work {trace[-1].work:g} after {len(trace)} steps")
    for alpha, (count, frac) in allocation_profile(state, ens).items():
        print(f"  model {alpha}: {count} points, {100 * frac:.1f}% of work")
    z = np.random.default_rng(args.seed).uniform(-1, 1, size=(1000, 1))
    truth = np.array([ens.reference(p) for p in z])[:, 0]
    print(f"surrogate max error {np.max(np.abs(state.evaluate(z)[:, 0] - truth)):.4f}")
    for key in sorted(state.accepted):
        err = np.max(np.abs(tensor_eval(state.components[key], z)[:, 0] - truth))
        print(f"  interpolant {key}: {err:.4f}")


if __name__ == "__main__":
    main()
