"""Command-line entry point: ``nstar-relay {pdf,outage,af,pa,validate}``.

Exit codes: 0 success, 1 validation failures, 2 config error, 3 numerical
non-convergence, 4 I/O error.
"""

import argparse
import sys
from dataclasses import replace

from . import __version__
from .config import EXPERIMENT_METRIC, PRESET_ALIASES, load_config
from .errors import ConfigError, DomainError, NonConvergenceError
from .experiments import preset_config, run_experiment

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NONCONVERGENCE, EXIT_IO = 0, 1, 2, 3, 4

SUBCOMMAND_PRESETS = {
    "pdf": ("fig1",),
    "outage": ("fig2", "fig3"),
    "af": ("fig4",),
    "pa": ("fig5",),
}


def _u64(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text):
    value = int(float(text))
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nstar-relay",
        description="Analytic and Monte-Carlo performance of multihop relays over n*Rayleigh fading.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, presets in SUBCOMMAND_PRESETS.items():
        p = sub.add_parser(name, help=f"run a {name} experiment (presets: {', '.join(presets)})")
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="YAML experiment file")
        src.add_argument("--preset", choices=presets)
        p.add_argument("--seed", type=_u64)
        p.add_argument("--trials", type=_positive_int)
        p.add_argument("--out", help="output directory for CSV and metadata files")
        p.add_argument("--workers", type=_positive_int, help="sweep points evaluated concurrently")
    v = sub.add_parser("validate", help="run the acceptance checks and print one line per criterion")
    v.add_argument("--only", help="comma-separated criterion numbers, e.g. 1,3,9")
    v.add_argument("--seed", type=_u64)
    return parser


def _resolve_config(args):
    if args.preset:
        config = preset_config(args.preset)
    else:
        config = load_config(args.config)
        allowed = {PRESET_ALIASES[p] for p in SUBCOMMAND_PRESETS[args.command]}
        if config.experiment in EXPERIMENT_METRIC and config.experiment not in allowed:
            raise ConfigError("VALIDATION_ERROR",
                              [f"experiment: {config.experiment.value} is not a {args.command} experiment"])
        if config.metric != args.command:
            raise ConfigError("VALIDATION_ERROR",
                              [f"metric: config computes {config.metric}, not {args.command}"])
    overrides = {k: v for k, v in (("seed", args.seed), ("trials", args.trials),
                                   ("output", args.out), ("workers", args.workers)) if v is not None}
    return replace(config, **overrides)


def _run(args):
    config = _resolve_config(args)
    result = run_experiment(config)
    for path in result.files:
        print(path)
    flagged = sum(p.flag != "" for c in result.curves for p in c.points)
    if flagged:
        print(f"{flagged} point(s) flagged LOW_CONFIDENCE", file=sys.stderr)
    return EXIT_OK


def _validate(args):
    from .validation import run_criteria

    only = None
    if args.only:
        only = [int(x) for x in args.only.split(",") if x.strip()]
    kwargs = {} if args.seed is None else {"seed": args.seed}
    results = run_criteria(only, **kwargs)
    for r in results:
        print(r.line(), flush=True)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} criteria passed")
    return EXIT_OK if failed == 0 else EXIT_FAILED


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _validate(args)
        return _run(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"error: numerical non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except DomainError as exc:
        print(f"error: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
