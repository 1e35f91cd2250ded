"""``fibm`` command line: sample | select | sweep | validate | report."""
from __future__ import annotations

import argparse
import logging
import sys

from .bench import MissingArtifacts, cmd_report, cmd_sample, cmd_select, cmd_sweep
from .config import ConfigError, RunConfig, read_config_file
from .diffusion import EnumerationTooLarge
from .graph import GraphFormatError
from .validation import cmd_validate
from .vrr import IndexCacheMiss

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_IO = 0, 1, 2, 3

# flag -> RunConfig field
FLAG_FIELDS = {
    "graph": "graph", "communities": "communities", "out": "out", "seed": "rng_seed", "beta": "beta",
    "beta_grid": "beta_grid", "k": "k", "mu": "mu", "alpha": "alpha", "selector": "selector",
    "mc_runs": "mc_runs", "vrr_samples": "samples_per_root", "repetitions": "repetitions",
    "objective": "objective", "negative_seeds": "negative_seeds", "index": "index",
    "weight_mode": "weight_mode", "directed": "directed",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat 'key = value' config file; flags override it")
    common.add_argument("--graph")
    common.add_argument("--communities")
    common.add_argument("--out")
    common.add_argument("--seed", type=int)
    beta = common.add_mutually_exclusive_group()
    beta.add_argument("--beta", type=float)
    beta.add_argument("--beta-grid", metavar="A:B:STEP")
    common.add_argument("--k", type=int)
    common.add_argument("--mu", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--selector", choices=("celf-r", "celf", "fc"))
    common.add_argument("--objective", choices=("fibm", "maxmin", "wf", "cff"))
    common.add_argument("--mc-runs", type=int)
    common.add_argument("--vrr-samples", type=int)
    common.add_argument("--repetitions", type=int)
    common.add_argument("--negative-seeds", metavar="top-degree:N|ids:a,b")
    common.add_argument("--index", help="VRR index dump to reuse")
    common.add_argument("--weight-mode", choices=("uniform-in-degree", "explicit"))
    common.add_argument("--directed", action="store_true", default=None)
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)

    parser = _Parser(prog="fibm", description="Fair influence blocking: sampling, selection and sweeps.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("sample", parents=[common], help="sample and store VRR indices")
    sub.add_parser("select", parents=[common], help="select positive seeds at one beta")
    sub.add_parser("sweep", parents=[common], help="sweep beta and emit the Pareto front")
    sub.add_parser("validate", parents=[common], help="cross-check estimators against exact oracles")
    rep = sub.add_parser("report", parents=[common], help="turn a run directory into plot-ready CSVs")
    rep.add_argument("run_dir", nargs="?")
    return parser


def config_from_args(args) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for flag, name in FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    return RunConfig(**values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "sample":
            for path in cmd_sample(cfg):
                print(path)
        elif args.command == "select":
            report = cmd_select(cfg)
            print(f"F={report.averages['F']:.6f} W={report.averages['W']:.6f} K={report.averages['K']:.6f}")
        elif args.command == "sweep":
            report = cmd_sweep(cfg)
            print(f"{report.averages['points']} points, {report.averages['nondominated']} non-dominated")
        elif args.command == "validate":
            report = cmd_validate(cfg, args.inject_fault)
            for c in report.checks:
                print(f"{'ok  ' if c.passed else 'FAIL'} {c.name}")
            if not report.passed:
                return EXIT_VALIDATION
        else:
            for path in cmd_report(args.run_dir or cfg.out):
                print(path)
    except (ConfigError, GraphFormatError, EnumerationTooLarge, ValueError) as exc:
        print(f"fibm: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MissingArtifacts, IndexCacheMiss, OSError) as exc:
        print(f"fibm: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
