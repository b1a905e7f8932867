"""
Pytest fixtures for the simulation-study integration tests.

The PDE ground truth and the benchmark tables are expensive, so they are
computed once per session and shared by every test that needs them.
"""
import logging
from typing import Dict

import pytest

from spacetime_pspline.bench import BenchConfig, BenchResult, run_benchmark
from spacetime_pspline.enums import Method
from spacetime_pspline.simulate import GroundTruth, default_ground_truth

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

REPLICATES = 20
ISE_RESOLUTION = (40, 40, 25)


@pytest.fixture(scope="session")
def ground_truth() -> GroundTruth:
    """Fixture that solves the default flow once for the whole session."""
    logger.info("Solving the default ground truth")
    return default_ground_truth(seed=0)


def _bench(truth: GroundTruth, scenario: int, methods) -> BenchResult:
    cfg = BenchConfig(
        scenarios=(scenario,),
        methods=tuple(methods),
        replicates=REPLICATES,
        base_seed=1,
        workers=0,
        ise_resolution=ISE_RESOLUTION,
    )
    return run_benchmark(cfg, truth=truth)


@pytest.fixture(scope="session")
def scenario_benches(ground_truth) -> Dict[int, BenchResult]:
    """
    Fixture with one benchmark run per scenario.

    Yields:
        Dict mapping scenario id to its :class:`BenchResult`
    """
    methods = {
        1: (Method.AICC, Method.GCV, Method.CV_OBS, Method.CV_WELL, Method.BIC, Method.MAP),
        2: (Method.BIC, Method.MAP, Method.BAYES_AVG),
        3: (Method.GCV, Method.MAP),
    }
    return {scenario: _bench(ground_truth, scenario, m) for scenario, m in methods.items()}
