"""
Command-line interface.

Subcommands::

    spacetime-pspline fit --input wells.csv --basis 14,8,5 --method map --output fit.json
    spacetime-pspline predict --fit fit.json --size 50,50,4 --output grid.csv [--at-times 0.2,0.8] [--sd]
    spacetime-pspline simulate --scenario 1 --seed 11 --out data.csv [--truth truth.bin]
    spacetime-pspline bench --scenarios 1,2,3 --methods map,aicc,bic --replicates 50 --seed 1 --out results/

Exit codes: 0 success, 2 data error, 3 configuration error, 4 numerical error.
"""

import argparse
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from spacetime_pspline.bench import run_benchmark, write_outputs
from spacetime_pspline.data_model import atomic_path, load_csv
from spacetime_pspline.enums import Method
from spacetime_pspline.exceptions import (
    ConfigurationError,
    DataError,
    NumericalError,
    PsplineError,
)
from spacetime_pspline.logging_config import add_progress_filter, configure_logging
from spacetime_pspline.predict import grid_axes, predict_grid
from spacetime_pspline.schemas import (
    BenchConfigSchema,
    RunConfigSchema,
    fit_from_artifact,
    fit_to_artifact,
    load_config,
)
from spacetime_pspline.selection import SpatiotemporalSmoother, score_trace_frame
from spacetime_pspline.simulate import (
    GroundTruth,
    ScenarioSpec,
    build_scenario,
    default_ground_truth,
)
from spacetime_pspline.splines import TensorBasisSpec

logger = logging.getLogger("spacetime_pspline.cli")

EXIT_OK = 0
EXIT_DATA_ERROR = 2
EXIT_CONFIGURATION_ERROR = 3
EXIT_NUMERICAL_ERROR = 4


class ArgumentParser(argparse.ArgumentParser):
    """Argument parser that reports usage errors as configuration errors."""

    def error(self, message: str) -> None:
        raise ConfigurationError(f"{self.prog}: {message}")


def _parse_list(text: Optional[str], cast: Callable[[str], Any], flag: str) -> Optional[List[Any]]:
    if text is None:
        return None
    try:
        return [cast(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigurationError(f"{flag}: cannot parse {text!r} as a comma-separated list")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--log-level", default="INFO", help="Logging level (default: INFO)")
    parser.add_argument("--log-file", default=None, help="Also write logs to this file")


def _add_model_options(parser: argparse.ArgumentParser, default_basis: Optional[str]) -> None:
    parser.add_argument(
        "--basis",
        required=default_basis is None,
        default=default_basis,
        help="Basis functions for s1,s2,t, e.g. 14,8,5",
    )
    parser.add_argument("--degree", type=int, default=2, help="Spline degree (default: 2)")
    parser.add_argument("--penalty-order", type=int, default=1, help="Difference penalty order, 1 or 2")
    parser.add_argument(
        "--grid", default="-8,8,101", help="log10(λ) grid as lo,hi,n, e.g. --grid=-6,6,61 (default: -8,8,101)"
    )
    parser.add_argument("--prior-a", type=float, default=1e-4, help="Inverse-gamma shape a")
    parser.add_argument("--prior-b", type=float, default=1e-4, help="Inverse-gamma scale b")
    parser.add_argument(
        "--lambda-prior",
        default="uniform_on_lambda",
        help="Prior on λ: uniform_on_lambda or uniform_on_log_lambda",
    )
    parser.add_argument("--folds", type=int, default=10, help="Cross-validation folds (default: 10)")


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(
        prog="spacetime-pspline",
        description="Tensor-product p-spline smoothing of spatiotemporal well data",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    fit = sub.add_parser("fit", help="Fit a surface and write a fit artifact")
    fit.add_argument("--input", required=True, help="Input CSV with well_id,s1,s2,t,value")
    fit.add_argument("--output", required=True, help="Fit artifact path (JSON)")
    fit.add_argument("--trace", default=None, help="Score-trace CSV path (default: <output>.trace.csv)")
    fit.add_argument(
        "--method",
        default="map",
        help="map, bayes-avg, aic, aicc, gcv, bic, cv-obs or cv-well (default: map)",
    )
    fit.add_argument("--seed", type=int, default=0, help="Seed for cross-validation folds")
    fit.add_argument("--transform", default="log1p", help="Response transform: log1p or identity")
    fit.add_argument("--drop-wells", default=None, help="Comma-separated well ids to leave out")
    fit.add_argument(
        "--store-covariance",
        action="store_true",
        help="Store the posterior covariance so that predict --sd works",
    )
    _add_model_options(fit, default_basis=None)
    _add_common(fit)

    predict = sub.add_parser("predict", help="Evaluate a fitted surface on a grid")
    predict.add_argument("--fit", required=True, help="Fit artifact written by 'fit'")
    predict.add_argument("--output", required=True, help="Grid CSV path")
    predict.add_argument("--size", default="50,50,4", help="Grid points along s1,s2,t (default: 50,50,4)")
    predict.add_argument(
        "--bounds",
        default=None,
        help="s1lo,s1hi,s2lo,s2hi,tlo,thi (default: the fitted knot ranges)",
    )
    predict.add_argument("--at-times", default=None, help="Comma-separated snapshot times")
    predict.add_argument("--sd", action="store_true", help="Add predictive standard deviations")
    _add_common(predict)

    simulate = sub.add_parser("simulate", help="Generate a synthetic scenario dataset")
    simulate.add_argument("--scenario", type=int, required=True, help="Scenario 1, 2 or 3")
    simulate.add_argument("--seed", type=int, default=0, help="Scenario seed")
    simulate.add_argument("--out", required=True, help="Output CSV path")
    simulate.add_argument("--truth", default=None, help="Also write the ground truth to this file")
    simulate.add_argument("--truth-seed", type=int, default=0, help="Seed of the flow field")
    simulate.add_argument("--snr", type=float, default=10.0, help="Log-scale signal-to-noise ratio")
    simulate.add_argument(
        "--within-well-correlation",
        type=float,
        default=0.05,
        help="Error correlation between samples of one well (default: 0.05)",
    )
    _add_common(simulate)

    bench = sub.add_parser("bench", help="Compare selection methods on simulated replicates")
    bench.add_argument("--scenarios", default="1,2,3", help="Comma-separated scenario ids")
    bench.add_argument(
        "--methods",
        default="aicc,gcv,cv_obs,cv_well,bic,map,bayes_avg",
        help="Comma-separated method names",
    )
    bench.add_argument("--replicates", type=int, default=50, help="Replicates per scenario")
    bench.add_argument("--seed", type=int, default=1, help="Base seed")
    bench.add_argument("--out", required=True, help="Output directory")
    bench.add_argument("--workers", type=int, default=1, help="Worker processes (0: all cores)")
    bench.add_argument("--truth-seed", type=int, default=0, help="Seed of the flow field")
    bench.add_argument("--truth", default=None, help="Use this ground-truth file instead of solving")
    _add_model_options(bench, default_basis="14,8,5")
    _add_common(bench)

    return parser


def _model_settings(args: argparse.Namespace) -> Dict[str, Any]:
    """Raw grid, prior and basis settings shared by ``fit`` and ``bench``."""
    grid = _parse_list(args.grid, float, "--grid")
    if len(grid) != 3 or not float(grid[2]).is_integer():
        raise ConfigurationError(f"--grid: expected lo,hi,n, got {args.grid!r}")
    return {
        "grid": {"lo": grid[0], "hi": grid[1], "n": int(grid[2])},
        "prior": {"a": args.prior_a, "b": args.prior_b, "lambda_prior": args.lambda_prior},
        "basis": {
            "counts": _parse_list(args.basis, int, "--basis"),
            "degree": args.degree,
            "penalty_order": args.penalty_order,
        },
        "folds": args.folds,
    }


def cmd_fit(args: argparse.Namespace) -> int:
    """Fits a dataset and writes the fit artifact plus the score trace."""
    settings = _model_settings(args)
    cfg = load_config(
        RunConfigSchema(),
        {
            "input": args.input,
            "output": args.output,
            "trace": args.trace,
            "basis": settings["basis"],
            "grid": settings["grid"],
            "prior": settings["prior"],
            "method": args.method,
            "seed": args.seed,
            "folds": settings["folds"],
            "transform": args.transform,
            "drop_wells": _parse_list(args.drop_wells, str, "--drop-wells") or [],
        },
    )
    ds = load_csv(cfg["input"], transform=cfg["transform"])
    if cfg["drop_wells"]:
        ds = ds.without_wells(cfg["drop_wells"])
    basis = cfg["basis"]
    spec = TensorBasisSpec.for_dataset(ds, basis["counts"], basis["degree"], basis["penalty_order"])
    smoother = SpatiotemporalSmoother(ds, spec, prior=cfg["prior"], grid=cfg["grid"])
    fit = smoother.fit(Method(cfg["method"]), seed=cfg["seed"], folds=cfg["folds"])
    if args.store_covariance:
        fit = smoother.with_covariance(fit)

    with atomic_path(cfg["output"]) as tmp, open(tmp, "w", encoding="utf-8") as f:
        f.write(fit_to_artifact(fit))
    trace_path = cfg["trace"] or f"{os.path.splitext(cfg['output'])[0]}.trace.csv"
    with atomic_path(trace_path) as tmp:
        score_trace_frame(fit).to_csv(tmp, index=False, float_format="%.17g")
    logger.info(f"Wrote fit artifact {cfg['output']} and score trace {trace_path}")
    return EXIT_OK


def cmd_predict(args: argparse.Namespace) -> int:
    """Evaluates a stored fit on a grid and writes the long-format CSV."""
    try:
        with open(args.fit, encoding="utf-8") as f:
            fit = fit_from_artifact(f.read())
    except FileNotFoundError:
        raise DataError(f"Fit artifact not found: {args.fit}")

    sizes = _parse_list(args.size, int, "--size")
    if sizes is None or len(sizes) != 3 or min(sizes) < 1:
        raise ConfigurationError(f"--size: expected three positive integers, got {args.size!r}")
    if args.bounds is not None:
        bounds = _parse_list(args.bounds, float, "--bounds")
        if len(bounds) != 6:
            raise ConfigurationError(f"--bounds: expected six numbers, got {args.bounds!r}")
        axes = [np.linspace(bounds[2 * d], bounds[2 * d + 1], sizes[d]) for d in range(3)]
    else:
        axes = list(grid_axes(fit.spec, sizes))
    if args.at_times is not None:
        axes[2] = np.asarray(_parse_list(args.at_times, float, "--at-times"), dtype=float)

    grid = predict_grid(fit, axes[0], axes[1], axes[2], hull=fit.hull, with_sd=args.sd)
    grid.to_csv(args.output)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    """Generates one scenario dataset and optionally writes the ground truth."""
    spec = ScenarioSpec(
        args.scenario,
        seed=args.seed,
        snr=args.snr,
        within_well_correlation=args.within_well_correlation,
    )
    truth = default_ground_truth(args.truth_seed)
    ds = build_scenario(truth, spec)
    ds.to_csv(args.out)
    if args.truth:
        truth.save(args.truth)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    """Runs the replicated method comparison and writes its tables."""
    settings = _model_settings(args)
    cfg = load_config(
        BenchConfigSchema(),
        {
            "scenarios": _parse_list(args.scenarios, int, "--scenarios"),
            "methods": _parse_list(args.methods, str, "--methods"),
            "replicates": args.replicates,
            "seed": args.seed,
            "basis": settings["basis"],
            "folds": settings["folds"],
            "workers": args.workers,
            "truth_seed": args.truth_seed,
            "grid": settings["grid"],
            "prior": settings["prior"],
        },
    )
    truth = GroundTruth.load(args.truth) if args.truth else None
    add_progress_filter()
    result = run_benchmark(cfg, truth=truth)
    write_outputs(result, args.out)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "simulate": cmd_simulate,
    "bench": cmd_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Runs the command line and returns the exit code.

    Errors are reported on standard error as ``error: <message>``.
    """
    try:
        args = build_parser().parse_args(argv)
        configure_logging(
            level=args.log_level,
            log_file=args.log_file,
            log_to_file=args.log_file is not None,
        )
        return COMMANDS[args.command](args)
    except DataError as e:
        code = EXIT_DATA_ERROR
        message = e.message
    except ConfigurationError as e:
        code = EXIT_CONFIGURATION_ERROR
        message = e.message
    except (NumericalError, PsplineError) as e:
        code = EXIT_NUMERICAL_ERROR
        message = e.message
    print(f"error: {message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
