"""``fiqsim run --config <path>``: run one scenario and emit its report.

Exit status is 0 when every verdict passes, 1 when any fails, 2 for an
invalid config and 3 when the report cannot be written.
"""
from __future__ import annotations

import argparse
import sys

from .experiments import SCENARIOS, ConfigError, ExperimentConfig, ReportWriteError, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fiqsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("--config", help="JSON experiment config")
    run_p.add_argument("--scenario", choices=SCENARIOS)
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--trials", type=int)
    run_p.add_argument("--output", dest="output_path", help="report path (overrides config)")
    run_p.add_argument("--format", dest="output_format", choices=("json", "csv"))
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = ExperimentConfig.load(args.config)
        elif args.scenario:
            cfg = ExperimentConfig(args.scenario)
        else:
            raise ConfigError(["give --config or --scenario"])
        for name in ("scenario", "seed", "trials", "output_path", "output_format"):
            value = getattr(args, name)
            if value is not None:
                setattr(cfg, name, value)
        report = run(cfg, echo=True)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except ReportWriteError as exc:
        print(str(exc), file=sys.stderr)
        return 3
    return 0 if report["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
