"""Command-line front end: ``herald-sim {fidelity,sweep,optimize,mc-check}``.

Exit codes: 0 success, 1 invalid input, 2 degenerate herald (or no
heralds in Monte Carlo), 3 Monte Carlo disagreement.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from typing import List, Optional, Sequence

from . import __version__
from .analysis import (
    PRESETS,
    AllDegenerateError,
    AxisSpec,
    SweepGrid,
    make_config,
    optimize_eta_ref,
    sweep,
)
from .conditioning import DEFAULT_TOLERANCE, DegenerateHeraldError, prepare
from .detector import DetectorParams, InvalidParameterError
from .montecarlo import McConfig, ZeroHeraldsError, compare, run

EXIT_OK, EXIT_INVALID, EXIT_DEGENERATE, EXIT_MC_FAIL = 0, 1, 2, 3
THREADS_ENV = "HERALD_SIM_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def format_value(v) -> str:
    """CSV cell text; floats carry 17 significant digits."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _json_value(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g") if math.isfinite(v) else "null"
    return json.dumps(v)


def _json_object(rec: dict) -> str:
    return "{" + ", ".join(f"{json.dumps(k)}: {_json_value(v)}" for k, v in rec.items()) + "}"


def render(records: Sequence[dict], fmt: str, as_array: bool = True) -> str:
    if fmt == "json":
        if not as_array:
            return _json_object(records[0]) + "\n"
        return "[\n" + ",\n".join("  " + _json_object(r) for r in records) + "\n]\n"
    cols = list(records[0]) if records else []
    lines = [",".join(cols)]
    lines += [",".join(format_value(r[c]) for c in cols) for r in records]
    return "\n".join(lines) + "\n"


def _emit(text: str, output: str) -> None:
    if output in ("-", "stdout"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with io.open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _probability(name):
    def parse(s):
        try:
            v = float(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {s!r}")
        if not 0.0 <= v <= 1.0:
            raise argparse.ArgumentTypeError(f"{name} must lie in [0, 1], got {s}")
        return v

    return parse


def _chi(s):
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"chi must be a number, got {s!r}")
    if not 0.0 <= v < 1.0:
        raise argparse.ArgumentTypeError(f"chi must lie in [0, 1), got {s}")
    return v


def _positive_float(s):
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s!r}")
    if not v > 0.0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


def _positive_int(s):
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _seed(s):
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {s!r}")
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _axis_name(s):
    name = s.replace("-", "_")
    if name not in ("eta_ref", "loss", "dark"):
        raise argparse.ArgumentTypeError(f"axis must be eta-ref, loss or dark, got {s!r}")
    return name


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--chi", type=_chi, default=0.1, help="down-conversion strength (default 0.1)")
    common.add_argument("--eta-ref", type=_probability("eta-ref"), default=0.5,
                        help="beamsplitter reflectivity toward the herald detector")
    common.add_argument("--loss", type=_probability("loss"), default=0.0,
                        help="per-photon detector loss probability")
    common.add_argument("--dark", type=_probability("dark"), default=0.0,
                        help="dark-count probability per window")
    common.add_argument("--tolerance", type=_positive_float, default=DEFAULT_TOLERANCE)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--output", default="-", help="output path, or - for stdout")
    common.add_argument("--no-timestamp", action="store_true",
                        help="omit the timestamp from run metadata")

    parser = _Parser(prog="herald-sim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("fidelity", parents=[common], help="fidelity and heralding probability")

    sw = sub.add_parser("sweep", parents=[common], help="one- or two-parameter sweep")
    sw.add_argument("--preset", choices=sorted(PRESETS))
    sw.add_argument("--axis", type=_axis_name)
    sw.add_argument("--from", dest="start", type=float)
    sw.add_argument("--to", dest="stop", type=float)
    sw.add_argument("--points", type=int, default=100)
    sw.add_argument("--log", action="store_true")
    sw.add_argument("--axis2", type=_axis_name)
    sw.add_argument("--from2", dest="start2", type=float)
    sw.add_argument("--to2", dest="stop2", type=float)
    sw.add_argument("--points2", type=int, default=50)
    sw.add_argument("--log2", action="store_true")

    op = sub.add_parser("optimize", parents=[common], help="best splitting ratio")
    op.add_argument("--refine-tol", type=_positive_float, default=1e-6)
    op.add_argument("--scan-points", type=_positive_int, default=1024)

    mc = sub.add_parser("mc-check", parents=[common], help="Monte Carlo cross-check")
    mc.add_argument("--trials", type=_positive_int, default=10**6)
    mc.add_argument("--seed", type=_seed, default=42)
    mc.add_argument("--workers", type=int, default=None,
                    help=f"worker threads (default: ${THREADS_ENV}, 0 or unset = auto)")
    return parser


def _workers(requested: Optional[int]) -> int:
    if requested is None:
        env = os.environ.get(THREADS_ENV, "").strip()
        try:
            requested = int(env) if env else 0
        except ValueError:
            raise InvalidParameterError(f"{THREADS_ENV} must be an integer, got {env!r}")
    if requested < 0:
        raise InvalidParameterError("worker count must be nonnegative")
    return requested or (os.cpu_count() or 1)


def cmd_fidelity(args) -> int:
    rep = prepare(args.chi, make_config(args.eta_ref, args.loss, args.dark), args.tolerance)
    _emit(render([rep.as_record()], args.format or "json", as_array=False), args.output)
    return EXIT_OK


def _grid_from_args(args) -> SweepGrid:
    fixed = dict(chi=args.chi, eta_ref=args.eta_ref, loss=args.loss, dark=args.dark)
    if args.preset:
        if args.axis or args.axis2:
            raise InvalidParameterError("--preset cannot be combined with --axis")
        grid = PRESETS[args.preset](args.chi)
        return SweepGrid(grid.axes, **fixed)
    if args.axis is None or args.start is None or args.stop is None:
        raise InvalidParameterError("sweep needs --preset or --axis with --from and --to")
    axes = [AxisSpec(args.axis, args.start, args.stop, args.points, args.log)]
    if args.axis2 is not None:
        if args.start2 is None or args.stop2 is None:
            raise InvalidParameterError("--axis2 needs --from2 and --to2")
        axes.append(AxisSpec(args.axis2, args.start2, args.stop2, args.points2, args.log2))
    return SweepGrid(tuple(axes), **fixed)


def cmd_sweep(args) -> int:
    grid = _grid_from_args(args)
    result = sweep(grid, args.tolerance, timestamp=not args.no_timestamp)
    meta = " ".join(f"{k}={v}" for k, v in result.metadata().items())
    print(f"# {meta}", file=sys.stderr)
    _emit(render(result.records(), args.format or "csv"), args.output)
    return EXIT_OK


def cmd_optimize(args) -> int:
    det = DetectorParams(args.loss, args.dark)
    rep = optimize_eta_ref(args.chi, det, args.refine_tol, args.scan_points, args.tolerance)
    _emit(render([rep.as_record()], args.format or "json", as_array=False), args.output)
    return EXIT_OK


def cmd_mc_check(args) -> int:
    cfg = make_config(args.eta_ref, args.loss, args.dark)
    mc = McConfig(args.trials, args.seed, args.chi, cfg)
    est = run(mc, workers=_workers(args.workers))
    try:
        rep = prepare(args.chi, cfg, args.tolerance)
    except DegenerateHeraldError as exc:
        raise ZeroHeraldsError(str(exc))
    cmp = compare(rep, est)
    rec = {
        "chi": args.chi,
        "eta_ref": args.eta_ref,
        "loss": args.loss,
        "dark": args.dark,
        "trials": est.trials,
        "seed": args.seed,
        "herald_count": est.herald_count,
        "analytic_fidelity": rep.fidelity,
        "mc_fidelity": est.fidelity_hat,
        "fidelity_se": est.fidelity_se,
        "fidelity_z": cmp.fidelity_z,
        "analytic_herald_prob": rep.herald_probability,
        "mc_herald_prob": est.herald_prob_hat,
        "herald_prob_se": est.herald_prob_se,
        "herald_prob_z": cmp.herald_prob_z,
        "verdict": "PASS" if cmp.passed else "FAIL",
    }
    _emit(render([rec], args.format or "json", as_array=False), args.output)
    return EXIT_OK if cmp.passed else EXIT_MC_FAIL


COMMANDS = {
    "fidelity": cmd_fidelity,
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
    "mc-check": cmd_mc_check,
}


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except (UsageError, InvalidParameterError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except DegenerateHeraldError as exc:
        print(f"degenerate herald: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except AllDegenerateError as exc:
        print(f"all scanned points degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ZeroHeraldsError as exc:
        print(f"zero heralds: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


def _entry() -> None:  # console script
    sys.exit(main())


if __name__ == "__main__":
    _entry()
