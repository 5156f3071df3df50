"""Command-line interface.

Subcommands mirror the device/server split: ``perturb`` is the only stage
that sees raw data; ``detect`` and the recovery half of ``reconstruct``
work purely on privatized values.  ``experiment`` drives full sweeps from
a YAML config file.

Exit codes: 0 success, 1 usage error, 2 ingestion error, 3 runtime or
detection failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .detection import DetectionConfig, default_detection_config, detect_period
from .exceptions import IngestionError, PeriodDetectionError
from .experiments import load_csv_column, load_experiment_config, run_experiment
from .mechanisms import split_budget, sw_params, sw_perturb_series
from .recovery import EmConfig, cpr_recover
from .signal import normalize

USAGE_ERROR = 1
INGESTION_ERROR = 2
RUNTIME_ERROR = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on usage errors; remap to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _write_series(path, values) -> None:
    with open(path, "w", newline="\n") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["value"])
        for v in values:
            writer.writerow([repr(float(v))])


def _detection_from_args(args, n: int) -> DetectionConfig:
    base = default_detection_config(n)
    scales = base.scales if args.scales is None else tuple(int(s) for s in args.scales.split(","))
    return DetectionConfig(
        scales=scales,
        t_min=args.t_min if args.t_min is not None else base.t_min,
        t_max=args.t_max if args.t_max is not None else base.t_max,
        peak_count=args.peaks,
        tolerance=args.tolerance,
        hann=not args.no_hann,
    )


def _add_series_args(parser):
    parser.add_argument("--input", required=True, help="input CSV file")
    parser.add_argument("--column", default="value", help="CSV column to read (default: value)")


def _add_budget_args(parser):
    parser.add_argument("--epsilon", type=float, required=True, help="total window privacy budget")
    parser.add_argument("--window", type=int, required=True, help="event-window length w")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (default: fresh entropy)")


def _add_detection_args(parser):
    parser.add_argument("--scales", default=None, help="comma-separated window lengths (default: n/8,n/4,n/2)")
    parser.add_argument("--t-min", type=int, default=None, help="smallest admissible period (default: 2)")
    parser.add_argument("--t-max", type=int, default=None, help="largest admissible period (default: n/3)")
    parser.add_argument("--peaks", type=int, default=5, help="spectral peaks probed per window (default: 5)")
    parser.add_argument("--tolerance", type=float, default=0.1, help="consensus vote tolerance (default: 0.1)")
    parser.add_argument("--no-hann", action="store_true", help="disable the Hann taper")


def _add_em_args(parser):
    parser.add_argument("--em-grid", type=int, default=256, help="EM grid size (default: 256)")
    parser.add_argument("--em-iters", type=int, default=200, help="EM iteration cap (default: 200)")
    parser.add_argument("--em-tol", type=float, default=1e-6, help="EM convergence tolerance (default: 1e-6)")


def build_parser() -> _Parser:
    parser = _Parser(prog="cpr-ldp", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("perturb", help="normalize a raw series and release its privatized counterpart")
    _add_series_args(p)
    _add_budget_args(p)
    p.add_argument("--output", required=True, help="output CSV for the privatized series")

    p = sub.add_parser("detect", help="estimate the dominant period of a privatized series")
    _add_series_args(p)
    _add_detection_args(p)

    p = sub.add_parser("reconstruct", help="run the full pipeline: perturb, detect, recover")
    _add_series_args(p)
    _add_budget_args(p)
    _add_detection_args(p)
    _add_em_args(p)
    p.add_argument("--output", required=True, help="output CSV for the reconstruction")

    p = sub.add_parser("experiment", help="run sweeps from a YAML config and write report CSVs")
    p.add_argument("--config", required=True, help="YAML experiment config")
    p.add_argument("--outdir", required=True, help="directory for the report CSVs")
    p.add_argument(
        "--sweep",
        choices=("detection", "reconstruction", "both"),
        default="both",
        help="which sweeps to run (default: both)",
    )

    return parser


def _cmd_perturb(args) -> int:
    raw = load_csv_column(args.input, args.column)
    budget = split_budget(args.epsilon, args.window)
    privatized = sw_perturb_series(normalize(raw), budget, args.seed)
    _write_series(args.output, privatized)
    print(f"wrote {len(privatized)} privatized values to {args.output}")
    return 0


def _cmd_detect(args) -> int:
    series = load_csv_column(args.input, args.column)
    config = _detection_from_args(args, series.size)
    print(detect_period(series, config))
    return 0


def _cmd_reconstruct(args) -> int:
    raw = load_csv_column(args.input, args.column)
    unit = normalize(raw)
    budget = split_budget(args.epsilon, args.window)
    params = sw_params(budget.eps0)
    privatized = sw_perturb_series(unit, budget, args.seed)
    detection = _detection_from_args(args, unit.size)
    em = EmConfig(grid_size=args.em_grid, max_iters=args.em_iters, tol=args.em_tol)
    recon, period = cpr_recover(privatized, params, detection, em)
    _write_series(args.output, recon)
    print(f"detected period {period}; wrote reconstruction to {args.output}")
    return 0


def _cmd_experiment(args) -> int:
    spec, config = load_experiment_config(args.config)
    sweeps = ("detection", "reconstruction") if args.sweep == "both" else (args.sweep,)
    written = run_experiment(spec, config, Path(args.outdir), sweeps)
    for name, path in written.items():
        print(f"{name}: {path}")
    return 0


_COMMANDS = {
    "perturb": _cmd_perturb,
    "detect": _cmd_detect,
    "reconstruct": _cmd_reconstruct,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except IngestionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INGESTION_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except PeriodDetectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    except (RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
