"""Command-line entry point ``rsma-rm``.

Exit codes: 0 success, 1 invalid input, 2 runtime failure.
"""

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .harness import ALL_SCHEMES, emit_results, emit_rows, run_trials, sweep_delta_fb, sweep_eta
from .scenario import ScenarioError, default_scenario, load_scenario

log = logging.getLogger("rsma_rm")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def parse_grid(text):
    """``"a:b:step"`` (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            a, b, step = (float(v) for v in text.split(":"))
            if step <= 0 or b < a:
                raise ValueError
            n = int(np.floor((b - a) / step + 1e-9)) + 1
            return [round(a + i * step, 12) for i in range(n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"invalid grid {text!r}; expected a:b:step or a comma list") from None


def _scenario(args):
    sc = load_scenario(args.scenario) if args.scenario else default_scenario()
    if getattr(args, "seed", None) is not None:
        sc = replace(sc, seed=args.seed)
    if getattr(args, "trials", None) is not None:
        if args.trials < 1:
            raise InputError("--trials must be >= 1")
        sc = replace(sc, trials=args.trials)
    return sc


def _out(args, default):
    return args.out or default


def cmd_run(args):
    sc = _scenario(args)
    if args.scheme == "all":
        schemes = list(ALL_SCHEMES)
    elif args.scheme in ALL_SCHEMES:
        schemes = [args.scheme]
    else:
        raise InputError(f"unknown scheme {args.scheme!r}; choose from {list(ALL_SCHEMES)} or 'all'")
    table = run_trials(sc, schemes, workers=args.workers,
                       evaluate="mc" if args.evaluate == "mc" else "closed_form")
    path = emit_results(table, args.format, _out(args, f"results.{args.format}"))
    for scheme, agg in table.aggregates().items():
        print(f"{scheme:20s} satisfaction {agg['satisfaction_mean']:7.3f} %  "
              f"power {agg['power_mean_w']:.4f} W  failed {agg['failed_trials']}/{agg['trials']}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_sweep_eta(args):
    sc = _scenario(args)
    norms = {"l1": ("L1",), "l2": ("L2",), "both": ("L2", "L1")}[args.objective]
    grid = parse_grid(args.grid)
    if any(not 0 < g <= 1 for g in grid):
        raise InputError("eta grid values must lie in (0, 1]")
    rows = sweep_eta(sc, grid, norms=norms, workers=args.workers)
    for r in rows:
        print(f"eta {r['eta']:.3f} {r['objective']}  gap {r['gap_mean']:.4f}  power {r['power_mean_w']:.4f} W")
    print(f"wrote {emit_rows(rows, args.format, _out(args, f'sweep_eta.{args.format}'))}")
    return EXIT_OK


def cmd_sweep_delta(args):
    sc = _scenario(args)
    grid = parse_grid(args.grid)
    if any(g < 0 for g in grid):
        raise InputError("delta grid values must be >= 0")
    rows = sweep_delta_fb(sc, grid, delta_ce_deg=args.delta_ce, workers=args.workers)
    for r in rows:
        print(f"delta_fb {r['delta_fb_deg']:5.2f}  {r['scheme']:20s} {r['satisfaction_mean']:7.3f} %")
    print(f"wrote {emit_rows(rows, args.format, _out(args, f'sweep_delta.{args.format}'))}")
    return EXIT_OK


def cmd_validate_rates(args):
    from .validation import validate_rates

    sc = _scenario(args)
    rows = validate_rates(sc, n_precoders=args.precoders, n_draws=args.draws, seed=sc.seed)
    worst = max(r["rel_error"] for r in rows)
    print(f"{len(rows)} rate comparisons, worst relative error {worst:.4f}")
    if args.out:
        print(f"wrote {emit_rows(rows, args.format, args.out)}")
    return EXIT_OK


def cmd_selftest(args):
    from .selftest import run_selftest

    failures = run_selftest(verbose=True)
    return EXIT_OK if not failures else EXIT_RUNTIME


def build_parser():
    p = _Parser(prog="rsma-rm", description="Rate-matching precoder design and Monte Carlo evaluation.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, trials=True):
        sp.add_argument("--scenario", help="scenario JSON file (default: built-in default)")
        sp.add_argument("--seed", type=int)
        if trials:
            sp.add_argument("--trials", type=int)
            sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("run", help="run paired trials of one or all schemes")
    common(sp)
    sp.add_argument("--scheme", default="RM-RSMA", help=f"one of {list(ALL_SCHEMES)} or 'all'")
    sp.add_argument("--evaluate", choices=("closed", "mc"), default="closed",
                    help="rate evaluation: ergodic closed form or Monte Carlo")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep-eta", help="rate gap and power versus the regularization weight")
    common(sp)
    sp.add_argument("--grid", default="0.1,0.3,0.5,0.7,0.9,0.99")
    sp.add_argument("--objective", choices=("l1", "l2", "both"), default="both")
    sp.set_defaults(func=cmd_sweep_eta)

    sp = sub.add_parser("sweep-delta", help="satisfaction versus feedback phase-error std-dev")
    common(sp)
    sp.add_argument("--grid", default="0,2,5,10", help="delta_fb values in degrees")
    sp.add_argument("--delta-ce", type=float, default=2.0, help="estimation phase-error std-dev, degrees")
    sp.set_defaults(func=cmd_sweep_delta)

    sp = sub.add_parser("validate-rates", help="closed-form rates versus Monte Carlo")
    common(sp, trials=False)
    sp.add_argument("--precoders", type=int, default=20)
    sp.add_argument("--draws", type=int, default=10_000)
    sp.set_defaults(func=cmd_validate_rates)

    sp = sub.add_parser("selftest", help="run the built-in invariant checks")
    sp.set_defaults(func=cmd_selftest)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except InputError as exc:
        print(f"rsma-rm: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ScenarioError) as exc:
        print(f"rsma-rm: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"rsma-rm: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
