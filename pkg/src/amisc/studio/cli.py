"""Command-line front end: ``amisc {run,compare,sobol,density}``."""
from __future__ import annotations

import argparse
import logging
import sys

from amisc.studio.study import (
    StudyConfig,
    compare_study,
    density_report,
    run_study,
    sobol_report,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amisc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "one convergence study"),
        ("compare", "several strategies, merged convergence CSV"),
        ("sobol", "Sobol indices of the adaptive surrogate"),
        ("density", "kernel density estimate of each QoI"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON study configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--strategy", choices=("single", "multilevel", "multiindex"))
        p.add_argument("--tau", type=float)
        p.add_argument("--wmax", type=float, dest="w_max")
        p.add_argument("--kappa", type=float)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: getattr(args, k) for k in ("seed", "out", "strategy", "tau", "w_max", "kappa")}
    try:
        config = StudyConfig.from_file(args.config, **overrides)
    except (OSError, ValueError, TypeError) as exc:
        print(f"amisc: bad configuration: {exc}", file=sys.stderr)
        return 2
    if args.command == "run":
        run_study(config)
    elif args.command == "compare":
        compare_study(config)
    elif args.command == "sobol":
        sobol_report(config)
    else:
        density_report(config)
    return 0


if __name__ == "__main__":
    sys.exit(main())
