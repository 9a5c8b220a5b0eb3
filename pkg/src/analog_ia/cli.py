"""Command-line entry point: one subcommand per experiment scenario."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .config import ConfigError
from .experiments import SCENARIOS, default_spec, load_spec, run

_HELP = {
    "sumrate-sweep": "mean sum rate vs SNR for several feedback-power laws",
    "rateloss-vs-overhead": "rate loss over a grid of training and feedback lengths",
    "overhead-vs-frame": "optimal overhead length vs frame length",
    "overhead-vs-rate": "optimal overhead length vs achieved sum rate",
    "effective-throughput": "throughput net of overhead vs feedback length",
    "training-vs-feedback": "throughput over a training/feedback length grid",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="analog-ia",
        description="Interference alignment with analog CSI feedback: Monte Carlo experiments.",
    )
    sub = parser.add_subparsers(dest="scenario", required=True, metavar="SCENARIO")
    for name in SCENARIOS:
        p = sub.add_parser(name, help=_HELP[name], description=_HELP[name])
        p.add_argument("--config", help="YAML experiment file (defaults to the built-in settings)")
        p.add_argument("--out", required=True, help="CSV output path; the summary goes to <out>.json")
        p.add_argument("--trials", type=int, help="override the number of trials")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            spec = load_spec(args.config)
            if spec.scenario != args.scenario:
                raise ConfigError(f"config is for scenario {spec.scenario!r}, not {args.scenario!r}")
        else:
            spec = default_spec(args.scenario)
        changes = {}
        if args.trials is not None:
            changes["trials"] = args.trials
        if args.seed is not None:
            changes["master_seed"] = args.seed
        spec = dataclasses.replace(spec, **changes)
        if args.workers < 1:
            raise ConfigError(f"--workers >= 1 violated ({args.workers})")
        result = run(spec, out=args.out, workers=args.workers)
    except (ConfigError, OSError) as err:
        print(f"analog-ia: error: {err}", file=sys.stderr)
        return 2
    print(json.dumps({"rows": len(result.rows), "out": args.out}))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
