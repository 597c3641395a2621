"""Command-line entry point: ``d2dmimo {sweep,compare,figure,bounds,params}``.

Exit status is 0 when every requested computation succeeded (and, for
``compare``, every line passed), 1 otherwise.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import (METRICS, PRESETS, SweepError, SweepSpec, bounds_report, compare_report,
                          format_csv, preset_params, run_sweep, sweep_values)
from .montecarlo import DEFAULT_TRIALS, MonteCarloError
from .params import ParameterError, apply_overrides, default_params, dump_config, load_config, parse_set_options
from .quadrature import QuadratureError
from .scaling import ScaleDomainError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--config", help="key = value parameter file")
    c.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="parameter override, applied after --config (repeatable)")
    c.add_argument("--mc-trials", type=int, default=DEFAULT_TRIALS, help="Monte Carlo trials per estimate")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", help="write output here instead of stdout")
    c.add_argument("--no-mc", action="store_true", help="skip Monte Carlo columns")
    c.add_argument("--workers", type=int, default=1, help="worker threads")
    return c


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="d2dmimo", description="Uplink massive-MIMO network with underlaid D2D links.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sw = sub.add_parser("sweep", parents=[common], help="sweep one parameter and emit CSV")
    sw.add_argument("--field", required=True, help="parameter (or convenience key) to sweep")
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--metrics", default=",".join(METRICS), help=f"subset of {','.join(METRICS)}")
    sw.add_argument("--family-field", help="optional second parameter, one curve per value")
    sw.add_argument("--family-values", help="comma-separated family values")

    sub.add_parser("compare", parents=[common], help="analytic values against Monte Carlo")

    fig = sub.add_parser("figure", parents=[common], help="run a figure preset sweep")
    fig.add_argument("name", choices=sorted(PRESETS))

    bd = sub.add_parser("bounds", parents=[common], help="Jensen bounds and D2D-density thresholds")
    bd.add_argument("--target-cue", type=float, default=1.0, help="target CUE SE, bps/Hz")
    bd.add_argument("--target-d2d", type=float, default=1.0, help="target D2D SE, bps/Hz")

    sub.add_parser("params", parents=[common], help="print the resolved parameter set")
    return parser


def _resolve(args, preset: str | None = None):
    base = load_config(args.config) if args.config else default_params()
    if preset is not None:
        base = preset_params(preset, base)
    overrides = parse_set_options(args.set)
    return apply_overrides(base, overrides) if overrides else base


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run(args) -> int:
    mc_kwargs = dict(mc=not args.no_mc, mc_trials=args.mc_trials, seed=args.seed)
    if args.command == "params":
        _emit(dump_config(_resolve(args)), args.out)
        return 0
    if args.command == "bounds":
        _emit(bounds_report(_resolve(args), args.target_cue, args.target_d2d), args.out)
        return 0
    if args.command == "compare":
        report = compare_report(_resolve(args), args.mc_trials, args.seed, workers=args.workers)
        _emit(report.render(), args.out)
        return 0 if report.passed else 1
    if args.command == "figure":
        pr = PRESETS[args.name]
        spec = SweepSpec(_resolve(args, args.name), pr.field, pr.values, pr.metrics,
                         family_field=pr.family_field, family_values=pr.family_values, **mc_kwargs)
    else:
        metrics = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
        family = sweep_values(args.family_values) if args.family_values else ()
        spec = SweepSpec(_resolve(args), args.field, sweep_values(args.values), metrics,
                         family_field=args.family_field, family_values=family, **mc_kwargs)
    result = run_sweep(spec, workers=args.workers)
    _emit(format_csv(result), args.out)
    return 1 if result.failed else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (ParameterError, SweepError, MonteCarloError, ScaleDomainError, QuadratureError,
            ValueError, OSError) as exc:
        print(f"d2dmimo: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
