"""hedge-da command line.

Exit codes: 0 success (or certificate satisfied), 1 usage or configuration
error, 2 domain / parameter / parse error, 3 certificate violated.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import engine
from .bounds import (aggressive_bound, certify, fs_corollary_bound, optimal_hedge_bound, theorem1_rhs,
                     time_independent_bound)
from .errors import ConfigError, HedgeError
from .experiment import (cmd_generate, emit_plot_data, load_config, load_tapes, read_kv, read_trajectories,
                         run_experiment, write_report)
from .simulation import LossTape, TapeOracle, read_tape_csv
from .variants import VARIANTS, LossBounds, make_schedule, oracle_bound_L

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_VIOLATED = 0, 1, 2, 3
BOUND_VARIANTS = ("fs", "original", "optimal", "time-independent", "aggressive")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _variant_list(text):
    names = tuple(v.strip() for v in text.split(",") if v.strip())
    bad = [v for v in names if v not in VARIANTS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"variants must come from {','.join(VARIANTS)}")
    return names


def _u64(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file")
    common.add_argument("--seed", type=_u64)
    common.add_argument("--out")
    common.add_argument("--variants", type=_variant_list)
    common.add_argument("--runs", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--T", type=int)
    common.add_argument("--period", type=int)
    common.add_argument("--stride", type=int)
    common.add_argument("--workers", type=int)

    parser = _Parser(prog="hedge-da", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("generate", parents=[common], help="write loss tapes and a manifest")

    p = sub.add_parser("run", parents=[common], help="run variants head-to-head and write reports")
    p.add_argument("--tapes", nargs="+", help="replay these loss CSVs instead of generating")

    p = sub.add_parser("bound", parents=[common], help="print closed-form and generic regret bounds")
    p.add_argument("variant", choices=BOUND_VARIANTS)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--a-star", type=float, default=1.0)

    p = sub.add_parser("certify", parents=[common], help="check a run against its regret bound")
    p.add_argument("tape")
    p.add_argument("variant", choices=VARIANTS)
    p.add_argument("--mu", type=float, help="declared bound (default: manifest, else realized)")
    p.add_argument("--rho", type=float)
    p.add_argument("--a-star", type=float, default=1.0)

    p = sub.add_parser("emit-plot", parents=[common], help="long-format plot data and a plotting script")
    p.add_argument("--from", dest="source", required=True, help="trajectories.csv written by 'run'")
    return parser


def _config(args):
    return load_config(args.config, seed=args.seed, out=args.out, variants=args.variants, runs=args.runs,
                       n=args.n, T=args.T, period=args.period, stride=args.stride, workers=args.workers)


def _generic_rhs(variant, n, T, bounds, a_star):
    schedule = make_schedule(variant, n, bounds, T, a_star)
    L = oracle_bound_L(schedule.a, schedule.b, bounds)
    return theorem1_rhs(schedule, T, math.log(n), L) / schedule.a


def do_bound(args, out):
    if args.n is None or args.T is None:
        raise ConfigError("bound needs --n and --T")
    n, T = args.n, args.T
    bounds = LossBounds(args.mu, args.rho)
    variant = "original" if args.variant == "fs" else args.variant
    lines = [("variant", args.variant)]
    if variant == "original":
        lines.append(("stated", fs_corollary_bound(n, T, bounds)))
    elif variant == "optimal":
        stated, derived = optimal_hedge_bound(n, T, bounds)
        lines += [("stated", stated), ("derived", derived), ("ratio", derived / stated)]
    elif variant == "time-independent":
        tight, relaxed = time_independent_bound(n, T, bounds)
        lines += [("stated", tight), ("relaxed", relaxed)]
    else:
        lines.append(("stated", aggressive_bound(n, T, bounds)))
    lines.append(("generic", _generic_rhs(variant, n, T, bounds, args.a_star)))
    for key, value in lines:
        print(f"{key} = {value if isinstance(value, str) else repr(float(value))}", file=out)
    return EXIT_OK


def _declared_bounds(args, tape_path):
    if args.mu is not None or args.rho is not None:
        if args.mu is None or args.rho is None:
            raise ConfigError("--mu and --rho go together")
        return LossBounds(args.mu, args.rho)
    manifest = Path(tape_path).parent / "manifest.txt"
    name = Path(tape_path).name
    if manifest.exists():
        entries = read_kv(manifest)
        if f"{name}.mu" in entries:
            return LossBounds(float(entries[f"{name}.mu"]), float(entries[f"{name}.rho"]))
    return None


def do_certify(args, out):
    losses = read_tape_csv(args.tape)
    tape = LossTape(losses)
    bounds = _declared_bounds(args, args.tape)
    oracle = TapeOracle(losses, bounds)
    bounds = bounds or tape.bounds()
    schedule = make_schedule(args.variant, tape.n, bounds, tape.T, args.a_star)
    ledger, _ = engine.run(schedule, oracle, tape.T, bounds.mu, bounds.rho)
    report = certify(ledger, schedule, tape.T, tape.n, bounds)
    for line in report.lines():
        print(line, file=out)
    return EXIT_OK if report.satisfied else EXIT_VIOLATED


def do_run(args, out):
    config = _config(args)
    tapes = load_tapes(args.tapes) if args.tapes else None
    report = run_experiment(config, tapes)
    paths = write_report(report, config.out)
    for key, path in paths.items():
        print(f"{key} = {path}", file=out)
    violated = sum(not rep.satisfied for _, rep in report.certificates)
    return EXIT_VIOLATED if violated else EXIT_OK


def do_generate(args, out):
    config = _config(args)
    paths, manifest = cmd_generate(config)
    for path in paths:
        print(f"tape = {path}", file=out)
    print(f"manifest = {manifest}", file=out)
    return EXIT_OK


def do_emit_plot(args, out):
    report = read_trajectories(args.source)
    target = args.out or str(Path(args.source).parent)
    data, script = emit_plot_data(report, target)
    print(f"plot_data = {data}", file=out)
    print(f"script = {script}", file=out)
    return EXIT_OK


COMMANDS = {"generate": do_generate, "run": do_run, "bound": do_bound, "certify": do_certify,
            "emit-plot": do_emit_plot}


def main(argv=None, out=None):
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except ConfigError as exc:
        print(f"hedge-da: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HedgeError as exc:
        print(f"hedge-da: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"hedge-da: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
