"""
Type definitions for spacetime-pspline.

This module contains TypedDict classes describing the record shapes that cross
module boundaries (score traces, benchmark rows, file headers) plus a few aliases.
"""
from typing import List, Optional, TypedDict

import numpy as np
import numpy.typing as npt
import scipy.sparse as sp

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

# Compressed-row real matrix used for B and D. Built matrices are canonical:
# duplicates summed and explicit zeros eliminated.
SparseMatrix = sp.csr_matrix


class ScoreTraceRow(TypedDict, total=False):
    """Type definition for one row of a per-λ score trace export."""

    log10_lambda: float
    map_logpost: float
    aic: float
    aicc: float
    gcv: float
    bic: float
    cv_obs: Optional[float]
    cv_well: Optional[float]
    edf: float


class BenchRow(TypedDict):
    """Type definition for one aggregated (scenario, method) benchmark row."""

    scenario: int
    method: str
    mean_ise: float
    stderr: float
    n_valid: int
    mean_sse_wells: float


class LambdaSampleRow(TypedDict):
    """Type definition for one chosen-λ sample of the benchmark."""

    scenario: int
    method: str
    replicate: int
    log10_lambda: Optional[float]


class PosteriorSummaryDict(TypedDict):
    """Type definition for posterior summaries of log10(λ)."""

    mean: float
    median: float
    lower_95: float
    upper_95: float


class GroundTruthHeader(TypedDict):
    """Type definition for the JSON header of a ground-truth file."""

    dims: List[int]
    domain: List[float]
    times: List[float]
    dtype: str
