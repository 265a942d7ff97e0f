"""Command-line entry point: ``fraccontrol <subcommand> --config FILE --out FILE``."""
import argparse
import os
import sys
from pathlib import Path

from .errors import FracControlError
from .experiments import (emit_csv, run_cnd_report, run_gramian_report, run_impulsive_sweep,
                          run_linear_sweep, run_specfun_report, run_terminal_identity)
from .scenario import parse_scenario, shipped_config

OUT_DIR_ENV = "FRACCONTROL_OUT_DIR"

COMMANDS = {
    "check-specfun": ("linear", lambda s, a: run_specfun_report(s)),
    "gramian": ("linear", lambda s, a: run_gramian_report(s, a.eigenvalues)),
    "linear-sweep": ("linear", lambda s, a: run_linear_sweep(s)),
    "impulsive-sweep": ("impulsive", lambda s, a: run_impulsive_sweep(s)),
    "cnd": ("impulsive", lambda s, a: run_cnd_report(s)),
    "terminal-identity": ("linear", lambda s, a: run_terminal_identity(s)),
}


HELP = {
    "check-specfun": "Mittag-Leffler, Wright and subordination checks against closed forms",
    "gramian": "Gramian diagonal entries (or eigenvalues) per control interval",
    "linear-sweep": "feedback control of the linear system over the lambda grid",
    "impulsive-sweep": "Picard solve of the delayed impulsive system over the lambda grid",
    "cnd": "contraction-condition left-hand side over the lambda grid",
    "terminal-identity": "x(T) - x_T against -lambda R(lambda, Phi) l by three routes",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="fraccontrol", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (default_cfg, _) in COMMANDS.items():
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", type=Path, default=None,
                       help=f"scenario file (default: bundled {default_cfg}.cfg)")
        p.add_argument("--out", type=Path, default=None,
                       help=f"CSV path (default: ${OUT_DIR_ENV} or the working directory)")
        if name == "gramian":
            p.add_argument("--eigenvalues", action="store_true",
                           help="report eigenvalues instead of diagonal entries")
    return parser


def default_out(command):
    return Path(os.environ.get(OUT_DIR_ENV, ".")) / f"{command}.csv"


def main(argv=None):
    args = build_parser().parse_args(argv)
    default_cfg, run = COMMANDS[args.command]
    cfg = args.config or shipped_config(default_cfg)
    out = args.out or default_out(args.command)
    try:
        scenario = parse_scenario(cfg)
        report = run(scenario, args)
    except FracControlError as e:
        print(f"fraccontrol {args.command}: {e}", file=sys.stderr)
        return 2
    out.parent.mkdir(parents=True, exist_ok=True)
    emit_csv(report, out)
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
