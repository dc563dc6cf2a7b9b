"""Command-line interface: test CSV data, simulate, tune, and the
log-difference Granger pipeline.

Exit codes: 0 success, 2 malformed input or options, 3 numerical failure
(collinear basis, degenerate statistic, runaway recursion).  The statistical
decision is never encoded in the exit code; consumers parse the JSON.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np
import pandas as pd

from .basis import BasisSpec, candidate_grid
from .errors import ConfigurationError, DataError, DrciError, EstimationError
from .sample import Sample, lagged_triples
from .simulation import (
    DGP_NAMES,
    McConfig,
    linear_granger_test,
    log_diff_transform,
    monte_carlo,
)
from .statistic import run_test
from .tuning import TuningConfig, select_basis

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _parse_basis(text: str):
    """'auto' or a comma-separated degree triple like '2,2,2'."""
    if text == "auto":
        return "auto"
    try:
        degrees = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise ConfigurationError(f"cannot parse basis {text!r}; expected 'auto' or 'p1,p2,p3'")
    if len(degrees) != 3:
        raise ConfigurationError(f"basis needs exactly three degrees, got {text!r}")
    return degrees


def _read_csv(path: str) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise DataError(f"input file not found: {path}")
    except Exception as exc:
        raise DataError(f"cannot parse CSV {path}: {exc}")
    if frame.empty:
        raise DataError(f"CSV {path} has no data rows")
    return frame


def _columns(frame: pd.DataFrame, names: str, what: str) -> np.ndarray:
    cols = [c.strip() for c in names.split(",")]
    missing = [c for c in cols if c not in frame.columns]
    if missing:
        raise DataError(f"{what} column(s) not in CSV: {', '.join(missing)}")
    block = frame[cols].to_numpy(dtype=float)
    if not np.all(np.isfinite(block)):
        raise DataError(f"{what} column(s) contain missing or non-finite values")
    return block


def _load_sample(args) -> Sample:
    frame = _read_csv(args.input)
    if args.x or args.y or args.z:
        if not (args.x and args.y and args.z):
            raise ConfigurationError("--x, --y and --z must be given together")
        return Sample(
            x=_columns(frame, args.x, "x"),
            y=_columns(frame, args.y, "y"),
            z=_columns(frame, args.z, "z"),
        )
    if args.series_a and args.series_b:
        a = _columns(frame, args.series_a, "series-a")[:, 0]
        b = _columns(frame, args.series_b, "series-b")[:, 0]
        return lagged_triples(a, b, lag=args.lag)
    raise ConfigurationError("provide either --x/--y/--z or --series-a/--series-b")


def _emit(payload: str, output: str | None):
    if output:
        with open(output, "w", encoding="utf-8") as handle:
            handle.write(payload)
    else:
        sys.stdout.write(payload)


def _to_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def cmd_test(args) -> int:
    sample = _load_sample(args)
    basis = _parse_basis(args.basis)
    rank = not args.no_rank_transform
    payload = {}
    if basis == "auto":
        config = TuningConfig(bootstrap_reps=args.bootstrap_reps, alpha=args.alpha,
                              size_band=args.size_band, seed=args.seed)
        report = select_basis(sample, candidate_grid(*args.grid), config,
                              rank_transform=rank, n_jobs=None)
        spec = report.chosen
        payload["tuning"] = report.to_dict()
    else:
        spec = BasisSpec.tensor(*basis)
    result = run_test(sample, spec, args.alpha, rank_transform=rank)
    payload.update(result.to_dict())
    if args.format == "csv":
        keys = ["statistic", "i_hat", "b_hat", "sigma_hat", "p_value", "reject", "alpha", "n"]
        lines = [",".join(keys), ",".join(str(payload[k]) for k in keys)]
        _emit("\n".join(lines) + "\n", args.output)
    else:
        _emit(_to_json(payload), args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    dgps = [d.strip().lower() for d in args.dgp.split(",")]
    for d in dgps:
        if d not in DGP_NAMES:
            raise ConfigurationError(f"unknown dgp {d!r}; expected one of {', '.join(DGP_NAMES)}")
    ns = [int(v) for v in args.n.split(",")]
    tests = tuple(t.strip().lower() for t in args.tests.split(","))
    config = McConfig(alpha=args.alpha, seed=args.seed, basis=_parse_basis(args.basis),
                      grid_degrees=tuple(args.grid), bootstrap_reps=args.bootstrap_reps,
                      size_band=args.size_band, rank_transform=not args.no_rank_transform,
                      burn_in=args.burn_in)
    report = monte_carlo(dgps, ns, args.reps, tests, config)
    if args.format == "json":
        rows = [
            {"dgp": r.dgp, "n": r.n, "test": r.test, "rate": r.rate,
             "reps": report.reps, "seed": report.seed}
            for r in report.rows
        ]
        _emit(_to_json({"rows": rows, "wall_time": report.wall_time}), args.output)
    else:
        _emit(report.to_csv(), args.output)
    return EXIT_OK


def cmd_tune(args) -> int:
    sample = _load_sample(args)
    config = TuningConfig(bootstrap_reps=args.bootstrap_reps, alpha=args.alpha,
                          size_band=args.size_band, seed=args.seed)
    report = select_basis(sample, candidate_grid(*args.grid), config,
                          rank_transform=not args.no_rank_transform, n_jobs=None)
    _emit(_to_json(report.to_dict()), args.output)
    return EXIT_OK


def cmd_granger(args) -> int:
    frame = _read_csv(args.input)
    a_name, b_name = args.series_a, args.series_b
    series_a = _columns(frame, a_name, "series-a")[:, 0]
    series_b = _columns(frame, b_name, "series-b")[:, 0]
    diff_a = log_diff_transform(series_a)
    diff_b = log_diff_transform(series_b)

    basis = _parse_basis(args.basis)
    rank = not args.no_rank_transform
    results = []
    for direction, (resp, resp_name, drv, drv_name) in (
        ("forward", (diff_a, a_name, diff_b, b_name)),
        ("reverse", (diff_b, b_name, diff_a, a_name)),
    ):
        sample = lagged_triples(resp, drv, lag=args.lag)
        label = f"{drv_name}->{resp_name}"
        lin_p, lin_rej = linear_granger_test(sample, args.alpha)
        results.append({"direction": label, "test": "lin",
                        "p_value": lin_p, "reject": lin_rej})
        if basis == "auto":
            config = TuningConfig(bootstrap_reps=args.bootstrap_reps, alpha=args.alpha,
                                  size_band=args.size_band, seed=args.seed)
            report = select_basis(sample, candidate_grid(*args.grid), config,
                                  rank_transform=rank, n_jobs=None)
            spec = report.chosen
        else:
            spec = BasisSpec.tensor(*basis)
        dr = run_test(sample, spec, args.alpha, rank_transform=rank)
        results.append({"direction": label, "test": "dr",
                        "statistic": dr.t_stat, "p_value": dr.p_value,
                        "reject": dr.reject})
    payload = {
        "alpha": args.alpha,
        "lag": args.lag,
        "n": int(len(diff_a) - args.lag),
        "series": {"a": a_name, "b": b_name},
        "results": results,
    }
    _emit(_to_json(payload), args.output)
    return EXIT_OK


def _add_io_options(parser, need_input=True):
    if need_input:
        parser.add_argument("--input", required=True, help="CSV file with a header row")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--output", default=None, help="write to file instead of stdout")


def _add_column_options(parser):
    parser.add_argument("--x", default=None, help="x column name(s), comma separated")
    parser.add_argument("--y", default=None, help="y column name(s)")
    parser.add_argument("--z", default=None, help="z column name(s)")
    parser.add_argument("--series-a", default=None, help="response series column")
    parser.add_argument("--series-b", default=None, help="driver series column")
    parser.add_argument("--lag", type=int, default=1)


def _add_test_options(parser):
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--basis", default="auto", help="'auto' or degrees 'p1,p2,p3'")
    parser.add_argument("--grid", type=lambda s: tuple(int(v) for v in s.split(",")),
                        default=(4, 2, 2), help="candidate grid degree caps")
    parser.add_argument("--bootstrap-reps", type=int, default=100)
    parser.add_argument("--size-band", type=float, default=0.025)
    parser.add_argument("--no-rank-transform", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drci",
        description="Conditional independence testing via density-ratio regression",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_test = sub.add_parser("test", help="run the test on CSV columns or series")
    _add_io_options(p_test)
    _add_column_options(p_test)
    _add_test_options(p_test)
    p_test.set_defaults(func=cmd_test)

    p_sim = sub.add_parser("simulate", help="Monte Carlo rejection-rate table")
    _add_io_options(p_sim, need_input=False)
    p_sim.add_argument("--dgp", required=True, help="comma-separated dgp names")
    p_sim.add_argument("--n", required=True, help="comma-separated series lengths")
    p_sim.add_argument("--reps", type=int, required=True)
    p_sim.add_argument("--tests", default="dr,lin")
    p_sim.add_argument("--burn-in", type=int, default=200)
    p_sim.set_defaults(format="csv")
    _add_test_options(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_tune = sub.add_parser("tune", help="bootstrap size-controlled basis selection")
    _add_io_options(p_tune)
    _add_column_options(p_tune)
    _add_test_options(p_tune)
    p_tune.set_defaults(func=cmd_tune)

    p_gr = sub.add_parser("granger", help="two-direction Granger tests on log-diffs")
    _add_io_options(p_gr)
    p_gr.add_argument("--series-a", required=True, help="first positive series (e.g. price)")
    p_gr.add_argument("--series-b", required=True, help="second positive series (e.g. volume)")
    p_gr.add_argument("--lag", type=int, default=1)
    _add_test_options(p_gr)
    p_gr.set_defaults(func=cmd_granger)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, ConfigurationError) as exc:
        print(f"drci: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EstimationError as exc:
        print(f"drci: estimation error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DrciError as exc:
        print(f"drci: error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
