"""``ssbo`` command line: run replicate sweeps and summarise bundles."""

import argparse
import sys

from .acquisition import ACQUISITION_KINDS
from .exceptions import SSBOError
from .experiment import MODES, ExperimentConfig, report, run_experiment
from .objectives import OBJECTIVE_KINDS


def build_parser():
    parser = argparse.ArgumentParser(prog="ssbo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every condition and replicate of a config")
    run.add_argument("--config", required=True, help="TOML experiment config")
    run.add_argument("--replicates", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--mode", choices=MODES)
    run.add_argument("--batch-size", type=int)
    run.add_argument("--acquisition", choices=ACQUISITION_KINDS)
    run.add_argument("--objective", choices=OBJECTIVE_KINDS)

    rep = sub.add_parser("report", help="rewrite summaries and bound reports of a bundle")
    rep.add_argument("bundle")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = ExperimentConfig.load(args.config).with_overrides(
                replicates=args.replicates,
                seed=args.seed,
                out=args.out,
                modes=args.mode,
                acquisitions=args.acquisition,
                objectives=args.objective,
                **{"run.batch_size": args.batch_size},
            )
            out = run_experiment(config)
            print(f"wrote {out}")
        else:
            for path in report(args.bundle):
                print(path)
    except SSBOError as exc:
        print(f"ssbo: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
