"""
Replicated comparison of smoothing-parameter selection methods on simulated data.

Every replicate draws a fresh scenario dataset from a shared ground truth
(seed ``base_seed + replicate``, so all methods see the same data), fits it
with each method and scores the fit by its integrated squared error. Non-CV
methods share a single decomposition per replicate.
"""

import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import psutil

from spacetime_pspline.data_model import atomic_path, convex_hull_region
from spacetime_pspline.decomposition import FACTORIZATIONS
from spacetime_pspline.enums import Method
from spacetime_pspline.exceptions import (
    BenchmarkError,
    ConfigurationError,
    DataError,
    NumericalError,
)
from spacetime_pspline.selection import LambdaGrid, PriorConfig, SpatiotemporalSmoother
from spacetime_pspline.simulate import (
    GroundTruth,
    ISEEvaluator,
    ScenarioSpec,
    build_scenario,
    default_ground_truth,
    well_squared_error,
)
from spacetime_pspline.splines import TensorBasisSpec
from spacetime_pspline.types import BenchRow, LambdaSampleRow

logger = logging.getLogger("spacetime_pspline.bench")

DEFAULT_METHODS: Tuple[Method, ...] = (
    Method.AICC,
    Method.GCV,
    Method.CV_OBS,
    Method.CV_WELL,
    Method.BIC,
    Method.MAP,
    Method.BAYES_AVG,
)
# Benchmark aborts when more than this fraction of (replicate, method) fits fail.
MAX_FAILURE_FRACTION = 0.10

RESULT_COLUMNS = ["scenario", "method", "mean_ise", "stderr", "n_valid", "mean_sse_wells"]
SAMPLE_COLUMNS = ["scenario", "method", "replicate", "log10_lambda"]


@dataclass(frozen=True)
class BenchConfig:
    """
    Settings of a benchmark run.

    Attributes:
        scenarios: Scenario ids to run
        methods: Selection methods to compare
        replicates: Number of replicates per scenario
        base_seed: Replicate r uses seed ``base_seed + r``
        basis_counts: Basis functions per dimension (s1, s2, t)
        degree: Spline degree
        penalty_order: Difference penalty order
        folds: Folds for cross-validation methods
        workers: Worker processes (1 runs sequentially, 0 uses all physical cores)
        truth_seed: Seed of the default flow field
        ise_resolution: Riemann grid for the ISE
        grid: λ grid
        prior: Prior configuration
    """

    scenarios: Tuple[int, ...] = (1, 2, 3)
    methods: Tuple[Method, ...] = DEFAULT_METHODS
    replicates: int = 50
    base_seed: int = 1
    basis_counts: Tuple[int, int, int] = (14, 8, 5)
    degree: int = 2
    penalty_order: int = 1
    folds: int = 10
    workers: int = 1
    truth_seed: int = 0
    ise_resolution: Tuple[int, int, int] = (50, 50, 50)
    grid: LambdaGrid = field(default_factory=LambdaGrid.default)
    prior: PriorConfig = field(default_factory=PriorConfig)

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ConfigurationError(f"Need at least one replicate, got {self.replicates}")
        if not self.methods:
            raise ConfigurationError("At least one method is required")
        if not self.scenarios or any(s not in (1, 2, 3) for s in self.scenarios):
            raise ConfigurationError(f"Scenarios must be a non-empty subset of 1, 2, 3, got {self.scenarios}")
        if self.workers < 0:
            raise ConfigurationError(f"Worker count must be >= 0, got {self.workers}")
        object.__setattr__(
            self, "methods", tuple(Method.parse(m) if isinstance(m, str) else m for m in self.methods)
        )

    @property
    def worker_count(self) -> int:
        if self.workers == 0:
            return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
        return self.workers


@dataclass(frozen=True)
class ReplicateOutcome:
    """One (scenario, replicate, method) fit and its scores."""

    scenario: int
    replicate: int
    method: Method
    ise: Optional[float] = None
    sse_wells: Optional[float] = None
    log10_lambda: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class BenchResult:
    """Outcomes of a benchmark run with the aggregated table."""

    config: BenchConfig
    outcomes: List[ReplicateOutcome]
    meta: Dict[str, object] = field(default_factory=dict)

    @property
    def failures(self) -> List[ReplicateOutcome]:
        return [o for o in self.outcomes if not o.ok]

    def rows(self) -> List[BenchRow]:
        """Aggregated rows: mean ISE, standard error of the mean and valid count."""
        rows = []
        for scenario in self.config.scenarios:
            for method in self.config.methods:
                valid = [
                    o for o in self.outcomes
                    if o.scenario == scenario and o.method is method and o.ok
                ]
                ise = np.array([o.ise for o in valid], dtype=float)
                sse = np.array([o.sse_wells for o in valid], dtype=float)
                n = ise.size
                rows.append(
                    BenchRow(
                        scenario=scenario,
                        method=method.value,
                        mean_ise=float(ise.mean()) if n else math.nan,
                        stderr=float(ise.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0 if n else math.nan,
                        n_valid=n,
                        mean_sse_wells=float(sse.mean()) if n else math.nan,
                    )
                )
        return rows

    def table(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows(), columns=RESULT_COLUMNS)

    def lambda_samples(self) -> List[LambdaSampleRow]:
        return [
            LambdaSampleRow(
                scenario=o.scenario,
                method=o.method.value,
                replicate=o.replicate,
                log10_lambda=o.log10_lambda,
            )
            for o in self.outcomes
            if o.ok
        ]


def run_replicate(
    truth: GroundTruth, cfg: BenchConfig, scenario: int, replicate: int
) -> List[ReplicateOutcome]:
    """Fits one scenario replicate with every configured method."""
    seed = cfg.base_seed + replicate
    ds = build_scenario(truth, ScenarioSpec(scenario, seed=seed))
    spec = TensorBasisSpec.for_dataset(ds, cfg.basis_counts, cfg.degree, cfg.penalty_order)
    smoother = SpatiotemporalSmoother(ds, spec, prior=cfg.prior, grid=cfg.grid)
    evaluator = ISEEvaluator(truth, convex_hull_region(ds), cfg.ise_resolution)

    outcomes = []
    for method in cfg.methods:
        try:
            fit = smoother.fit(method, seed=seed, folds=cfg.folds)
            outcomes.append(
                ReplicateOutcome(
                    scenario=scenario,
                    replicate=replicate,
                    method=method,
                    ise=evaluator(fit),
                    sse_wells=well_squared_error(fit, ds, truth),
                    log10_lambda=None if fit.lam is None else float(np.log10(fit.lam)),
                )
            )
        except (NumericalError, DataError) as e:
            logger.warning(f"Scenario {scenario}, replicate {replicate}, {method.value} failed: {e.message}")
            outcomes.append(
                ReplicateOutcome(scenario=scenario, replicate=replicate, method=method, error=e.message)
            )
    return outcomes


_WORKER_TRUTH: Optional[GroundTruth] = None


def _init_worker(truth: GroundTruth) -> None:
    global _WORKER_TRUTH
    _WORKER_TRUTH = truth


def _run_task(task: Tuple[BenchConfig, int, int]) -> List[ReplicateOutcome]:
    cfg, scenario, replicate = task
    return run_replicate(_WORKER_TRUTH, cfg, scenario, replicate)


def _log_ordering_violations(outcomes: Sequence[ReplicateOutcome]) -> None:
    by_key: Dict[Tuple[int, int], Dict[Method, float]] = {}
    for o in outcomes:
        if o.ok and o.log10_lambda is not None:
            by_key.setdefault((o.scenario, o.replicate), {})[o.method] = o.log10_lambda
    for (scenario, replicate), chosen in sorted(by_key.items()):
        if scenario != 1 or Method.BIC not in chosen:
            continue
        for method in (Method.AICC, Method.GCV):
            if method in chosen and chosen[method] > chosen[Method.BIC]:
                logger.warning(
                    f"Scenario 1, replicate {replicate}: {method.value} chose a larger λ than bic "
                    f"({chosen[method]:.2f} > {chosen[Method.BIC]:.2f})"
                )


def run_benchmark(cfg: BenchConfig, truth: Optional[GroundTruth] = None) -> BenchResult:
    """
    Runs every (scenario, replicate) pair and aggregates the outcomes.

    Parallel runs distribute replicates over worker processes; outcomes are
    sorted by (scenario, replicate, method) so the result does not depend on
    the worker count.

    Raises:
        BenchmarkError: If more than 10% of the fits fail
    """
    started = time.perf_counter()
    truth = truth if truth is not None else default_ground_truth(cfg.truth_seed)
    tasks = [(cfg, s, r) for s in cfg.scenarios for r in range(cfg.replicates)]
    workers = cfg.worker_count
    logger.info(
        f"Benchmark: scenarios {list(cfg.scenarios)}, {len(cfg.methods)} methods, "
        f"{cfg.replicates} replicates, {workers} worker(s)"
    )

    outcomes: List[ReplicateOutcome] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(truth,)) as pool:
            for done, batch in enumerate(pool.map(_run_task, tasks), start=1):
                outcomes.extend(batch)
                logger.info(f"Finished {done}/{len(tasks)} replicates", extra={"progress": True})
    else:
        for done, (_, scenario, replicate) in enumerate(tasks, start=1):
            outcomes.extend(run_replicate(truth, cfg, scenario, replicate))
            logger.info(f"Finished {done}/{len(tasks)} replicates", extra={"progress": True})

    method_order = {m: k for k, m in enumerate(cfg.methods)}
    outcomes.sort(key=lambda o: (o.scenario, o.replicate, method_order[o.method]))
    _log_ordering_violations(outcomes)

    result = BenchResult(config=cfg, outcomes=outcomes)
    n_failed = len(result.failures)
    if n_failed:
        logger.warning(f"{n_failed} of {len(outcomes)} fits failed and were excluded")
    if n_failed > MAX_FAILURE_FRACTION * len(outcomes):
        error_msg = f"{n_failed} of {len(outcomes)} benchmark fits failed (more than 10%)"
        logger.error(error_msg)
        raise BenchmarkError(error_msg)

    process = psutil.Process()
    result.meta = {
        "workers": workers,
        "cpu_count": psutil.cpu_count(),
        "total_memory_mb": psutil.virtual_memory().total / (1024 * 1024),
        "rss_mb": process.memory_info().rss / (1024 * 1024),
        "elapsed_s": time.perf_counter() - started,
        "factorizations_in_process": FACTORIZATIONS.count,
        "fits": len(outcomes),
        "failed_fits": n_failed,
    }
    logger.info(
        f"Benchmark finished in {result.meta['elapsed_s']:.1f}s "
        f"(resident memory {result.meta['rss_mb']:.0f} MB)"
    )
    return result


def export_lambda_distribution(result: BenchResult, path: str) -> None:
    """Writes one row per successful fit with its chosen log10(λ) (empty for averaging)."""
    frame = pd.DataFrame(result.lambda_samples(), columns=SAMPLE_COLUMNS)
    with atomic_path(path) as tmp:
        frame.to_csv(tmp, index=False, float_format="%.17g")
    logger.info(f"Wrote {len(frame)} λ samples to {path}")


def write_outputs(result: BenchResult, out_dir: str) -> Dict[str, str]:
    """Writes ``bench_results.csv``, ``lambda_samples.csv`` and ``bench_meta.json``."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "results": os.path.join(out_dir, "bench_results.csv"),
        "samples": os.path.join(out_dir, "lambda_samples.csv"),
        "meta": os.path.join(out_dir, "bench_meta.json"),
    }
    with atomic_path(paths["results"]) as tmp:
        result.table().to_csv(tmp, index=False, float_format="%.17g")
    export_lambda_distribution(result, paths["samples"])
    with atomic_path(paths["meta"]) as tmp, open(tmp, "w", encoding="utf-8") as f:
        json.dump(result.meta, f, indent=2, sort_keys=True)
    logger.info(f"Wrote benchmark outputs to {out_dir}")
    return paths
