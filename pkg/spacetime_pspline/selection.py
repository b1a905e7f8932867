"""
Smoothing-parameter selection.

Bayesian selection uses the marginal posterior of λ under a normal-inverse
gamma prior on (coefficients, noise variance); the classical criteria (AIC,
AICc, GCV, BIC) and K-fold cross-validation are available for comparison. All
quantities come from one :class:`~spacetime_pspline.decomposition.DecomposedModel`
per dataset (cross-validation decomposes each training fold once).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar
from sklearn.model_selection import KFold

from spacetime_pspline.data_model import Dataset, HullRegion, apply_transform, convex_hull_region
from spacetime_pspline.decomposition import (
    DecomposedModel,
    decompose,
    edf,
    log_det_pen_cov,
    quad_form,
    reduce_penalty,
    rss,
    solve_many,
    unscaled_covariance,
)
from spacetime_pspline.enums import Criterion, CVMode, LambdaPrior, Method, Transform
from spacetime_pspline.exceptions import (
    ConfigurationError,
    CriterionUndefinedError,
    DegeneracyError,
    DomainError,
    NumericalError,
)
from spacetime_pspline.splines import TensorBasisSpec, difference_penalty, tensor_design
from spacetime_pspline.types import FloatArray, PosteriorSummaryDict, ScoreTraceRow, SparseMatrix

logger = logging.getLogger("spacetime_pspline.selection")

# Golden-section / Brent refinement tolerance in log10(λ).
REFINE_XTOL = 1e-3

TRACE_COLUMNS: Tuple[str, ...] = tuple(ScoreTraceRow.__annotations__)


@dataclass(frozen=True)
class PriorConfig:
    """Inverse-gamma hyperparameters and the prior placed on λ."""

    a: float = 1e-4
    b: float = 1e-4
    lambda_prior: LambdaPrior = LambdaPrior.UNIFORM_ON_LAMBDA

    def __post_init__(self) -> None:
        if not (self.a > 0 and self.b > 0):
            raise ConfigurationError(
                f"Inverse-gamma parameters must be positive, got a={self.a}, b={self.b}"
            )
        object.__setattr__(self, "lambda_prior", LambdaPrior(self.lambda_prior))


@dataclass(frozen=True, eq=False)
class LambdaGrid:
    """Strictly increasing grid of log10(λ) values."""

    log10_values: FloatArray

    def __post_init__(self) -> None:
        values = np.asarray(self.log10_values, dtype=float).ravel()
        if values.size < 3:
            raise ConfigurationError(f"A λ grid needs at least 3 points, got {values.size}")
        if not np.all(np.isfinite(values)) or np.any(np.diff(values) <= 0):
            raise ConfigurationError("λ grid values must be finite and strictly increasing")
        values.setflags(write=False)
        object.__setattr__(self, "log10_values", values)

    @classmethod
    def default(cls, lo: float = -8.0, hi: float = 8.0, n: int = 101) -> "LambdaGrid":
        return cls(np.linspace(lo, hi, n))

    @property
    def lambdas(self) -> FloatArray:
        return 10.0**self.log10_values

    def __len__(self) -> int:
        return int(self.log10_values.size)


@dataclass(frozen=True, eq=False)
class SelectionResult:
    """
    Outcome of one selection method over a λ grid.

    Attributes:
        method: Selection method
        lam: Chosen λ (None for model averaging)
        scores: Per-grid-point scores (log posterior for Bayesian methods)
        weights: Normalised posterior weights for Bayesian methods
        edf: Effective degrees of freedom at the chosen λ (posterior mean for averaging)
        at_grid_edge: True when the optimum sits on a grid endpoint
        warnings: Human-readable warnings collected during selection
    """

    method: Method
    lam: Optional[float]
    scores: FloatArray
    weights: Optional[FloatArray] = None
    edf: Optional[float] = None
    at_grid_edge: bool = False
    warnings: List[str] = field(default_factory=list)

    @property
    def log10_lambda(self) -> Optional[float]:
        return None if self.lam is None else float(np.log10(self.lam))


@dataclass(frozen=True, eq=False)
class FitResult:
    """
    A fitted spatiotemporal p-spline surface.

    Attributes:
        method: Method used to choose λ
        lam: Chosen λ, None for model averaging
        coefficients: Coefficient vector (posterior-weighted for averaging)
        edf: Effective degrees of freedom
        spec: Basis configuration, including the data-global knot ranges
        transform: Transform of the working response
        n: Number of observations fitted
        l_flat: Dimension of the unpenalised block
        grid: λ grid used for the score trace
        prior: Prior configuration
        score_trace: Per-grid-point scores keyed by column name
        weights: Posterior weights over the grid (Bayesian methods)
        posterior: Posterior summary of log10(λ) (Bayesian methods)
        noise_scale: ``b* / a*`` at the chosen λ (fixed-λ fits)
        covariance: ``(B'B + lam D'D)^-1`` when attached, for predictive sd
        hull: Convex hull of the well locations and the sampled time interval
        data_digest: Digest of the fitted dataset
        warnings: Warnings collected while fitting
    """

    method: Method
    lam: Optional[float]
    coefficients: FloatArray
    edf: float
    spec: TensorBasisSpec
    transform: Transform
    n: int
    l_flat: int
    grid: LambdaGrid
    prior: PriorConfig
    score_trace: Dict[str, FloatArray]
    weights: Optional[FloatArray] = None
    posterior: Optional[PosteriorSummaryDict] = None
    noise_scale: Optional[float] = None
    covariance: Optional[FloatArray] = None
    hull: Optional[HullRegion] = None
    data_digest: str = ""
    warnings: List[str] = field(default_factory=list)

    @property
    def is_model_average(self) -> bool:
        return self.method is Method.BAYES_AVG


# ---------------------------------------------------------------------------
# Bayesian posterior of λ
# ---------------------------------------------------------------------------


def _log_prior(lambdas: np.ndarray, prior: PriorConfig) -> np.ndarray:
    if prior.lambda_prior is LambdaPrior.UNIFORM_ON_LOG_LAMBDA:
        return -np.log(lambdas)
    return np.zeros_like(lambdas)


def log_posterior_lambda(model: DecomposedModel, lam: float, prior: PriorConfig) -> float:
    """
    Unnormalised log posterior density of λ.

    ``(r/2) log lam - 1/2 log det(B'B + lam D'D)
    - (a + n/2) log(2b + y'(I - S(lam))y) + log prior(lam)``

    Raises:
        DomainError: If ``lam <= 0``
    """
    lam = float(lam)
    if not (np.isfinite(lam) and lam > 0):
        raise DomainError(f"The posterior of λ is defined for λ > 0, got {lam!r}")
    value = (
        0.5 * model.rank_pen * math.log(lam)
        - 0.5 * log_det_pen_cov(model, lam)
        - (prior.a + 0.5 * model.n) * math.log(2.0 * prior.b + quad_form(model, lam))
    )
    return float(value + _log_prior(np.array([lam]), prior)[0])


def log_posterior_grid(
    model: DecomposedModel, log10_lambdas: Sequence[float], prior: PriorConfig
) -> FloatArray:
    """Vectorised :func:`log_posterior_lambda` over log10(λ) values."""
    lambdas = 10.0 ** np.asarray(log10_lambdas, dtype=float)
    s2 = model.sigma[:, None] ** 2
    lam = lambdas[None, :]
    log_det = (
        np.sum(np.log(s2 + lam), axis=0)
        + (model.rank_pen - model.n_singular) * np.log(lambdas)
        + model.log_det_b12
        + model.log_det_jacobian
    )
    quad = model.rho_sq + np.sum(lam / (s2 + lam) * model.uty2[:, None] ** 2, axis=0)
    value = (
        0.5 * model.rank_pen * np.log(lambdas)
        - 0.5 * log_det
        - (prior.a + 0.5 * model.n) * np.log(2.0 * prior.b + quad)
    )
    return value + _log_prior(lambdas, prior)


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    if x.size == 1:
        return np.ones(1)
    gaps = np.diff(x)
    w = np.zeros_like(x)
    w[:-1] += gaps / 2
    w[1:] += gaps / 2
    return w


def average_weights(log10_lambdas: Sequence[float], log_density: Sequence[float]) -> FloatArray:
    """
    Normalised quadrature weights for averaging over λ.

    ``log_density`` is the log posterior density with respect to λ. The
    integral is taken in dλ on the log-spaced grid, i.e. with trapezoid
    weights in log10(λ) times the Jacobian ``lam * ln(10)``.

    Raises:
        NumericalError: If every weight underflows
    """
    x = np.asarray(log10_lambdas, dtype=float).ravel()
    lp = np.asarray(log_density, dtype=float).ravel()
    if x.size == 1:
        return np.ones(1)
    log_w = lp + np.log(_trapezoid_weights(x)) + x * np.log(10.0) + np.log(np.log(10.0))
    finite = np.isfinite(log_w)
    if not finite.any():
        raise NumericalError("All posterior weights are non-finite")
    log_w = np.where(finite, log_w, -np.inf)
    w = np.exp(log_w - log_w.max())
    total = w.sum()
    if not np.isfinite(total) or total <= 0:
        raise NumericalError("All posterior weights underflowed")
    return w / total


def _grid_values(grid: Union[LambdaGrid, Sequence[float]]) -> FloatArray:
    if isinstance(grid, LambdaGrid):
        return np.asarray(grid.log10_values)
    return np.atleast_1d(np.asarray(grid, dtype=float))


def model_average_weights(
    model: DecomposedModel, grid: Union[LambdaGrid, Sequence[float]], prior: PriorConfig
) -> FloatArray:
    """Posterior weights over the grid for Bayesian model averaging."""
    x = _grid_values(grid)
    return average_weights(x, log_posterior_grid(model, x, prior))


def posterior_summary(
    grid: Union[LambdaGrid, Sequence[float]], weights: Sequence[float]
) -> PosteriorSummaryDict:
    """Posterior mean, median and central 95% interval of log10(λ)."""
    x = _grid_values(grid)
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    # mass of each grid point is centred on it
    cdf = np.cumsum(w) - 0.5 * w

    def quantile(q: float) -> float:
        return float(np.interp(q, cdf, x))

    return PosteriorSummaryDict(
        mean=float(np.dot(w, x) / w.sum()),
        median=quantile(0.5),
        lower_95=quantile(0.025),
        upper_95=quantile(0.975),
    )


def map_lambda(
    model: DecomposedModel, grid: LambdaGrid, prior: PriorConfig
) -> SelectionResult:
    """
    Maximum-a-posteriori λ.

    The log posterior is evaluated on the grid, then refined by a bounded
    golden-section/parabolic search between the neighbours of the grid
    argmax. An argmax on a grid endpoint is flagged, not treated as an error.
    """
    x = np.asarray(grid.log10_values)
    scores = log_posterior_grid(model, x, prior)
    k = int(np.nanargmax(scores))
    warnings: List[str] = []
    at_edge = k in (0, x.size - 1)
    if at_edge:
        msg = (
            f"Posterior of λ peaks at the grid endpoint log10(λ)={x[k]:g}; "
            "the grid range may be too narrow"
        )
        logger.warning(msg)
        warnings.append(msg)

    lo, hi = x[max(k - 1, 0)], x[min(k + 1, x.size - 1)]
    best_x, best_value = float(x[k]), float(scores[k])
    refined = minimize_scalar(
        lambda u: -log_posterior_lambda(model, 10.0**u, prior),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": REFINE_XTOL},
    )
    if refined.success and -refined.fun >= best_value:
        best_x, best_value = float(refined.x), float(-refined.fun)

    lam = 10.0**best_x
    weights = average_weights(x, scores)
    logger.info(f"MAP log10(λ) = {best_x:.3f} (log posterior {best_value:.3f})")
    return SelectionResult(
        method=Method.MAP,
        lam=lam,
        scores=scores,
        weights=weights,
        edf=edf(model, lam),
        at_grid_edge=at_edge,
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# Classical criteria
# ---------------------------------------------------------------------------


def _criterion_from_parts(which: Criterion, n: int, residual: float, nu: float) -> float:
    if residual <= 0:
        raise CriterionUndefinedError(f"{which.value}: residual sum of squares is zero")
    if which is Criterion.GCV:
        if n - nu <= 0:
            raise CriterionUndefinedError(f"gcv: n - edf = {n - nu:g} <= 0")
        return n * residual / (n - nu) ** 2
    log_term = n * math.log(residual / n)
    if which is Criterion.BIC:
        return log_term + nu * math.log(n)
    if which is Criterion.AIC:
        return log_term + 2.0 * nu
    denominator = n - nu - 1.0
    if denominator <= 0:
        raise CriterionUndefinedError(f"aicc: n - edf - 1 = {denominator:g} <= 0")
    return log_term + 2.0 * nu + 2.0 * nu * (nu + 1.0) / denominator


def criterion_score(
    model: DecomposedModel, lam: float, which: Union[Criterion, str]
) -> float:
    """
    Classical criterion value at λ, with RSS = ||y - B â||^2 and ν = edf:

    - GCV  = n RSS / (n - ν)^2
    - BIC  = n log(RSS/n) + ν log n
    - AIC  = n log(RSS/n) + 2ν
    - AICc = n log(RSS/n) + 2ν + 2ν(ν+1)/(n - ν - 1)

    Raises:
        DomainError: If ``lam <= 0``
        CriterionUndefinedError: If the criterion is undefined at λ
    """
    which = Criterion(which)
    lam = float(lam)
    if not (np.isfinite(lam) and lam > 0):
        raise DomainError(f"Criteria are evaluated for λ > 0, got {lam!r}")
    return _criterion_from_parts(which, model.n, rss(model, lam), edf(model, lam))


def criterion_trace(
    model: DecomposedModel, grid: LambdaGrid, which: Union[Criterion, str]
) -> FloatArray:
    """Criterion over the grid; undefined points are reported as +inf."""
    which = Criterion(which)
    out = np.empty(len(grid))
    for i, lam in enumerate(grid.lambdas):
        try:
            out[i] = criterion_score(model, lam, which)
        except CriterionUndefinedError:
            out[i] = np.inf
    return out


def _argmin_result(
    method: Method, grid: LambdaGrid, scores: FloatArray, model: Optional[DecomposedModel]
) -> SelectionResult:
    if not np.any(np.isfinite(scores)):
        raise NumericalError(f"{method.value}: criterion undefined on the whole grid")
    k = int(np.argmin(np.where(np.isfinite(scores), scores, np.inf)))
    lam = float(grid.lambdas[k])
    warnings: List[str] = []
    at_edge = k in (0, len(grid) - 1)
    if at_edge:
        msg = f"{method.value}: minimum at the grid endpoint log10(λ)={grid.log10_values[k]:g}"
        logger.warning(msg)
        warnings.append(msg)
    return SelectionResult(
        method=method,
        lam=lam,
        scores=scores,
        edf=edf(model, lam) if model is not None else None,
        at_grid_edge=at_edge,
        warnings=warnings,
    )


def criterion_select(
    model: DecomposedModel, grid: LambdaGrid, which: Union[Criterion, str]
) -> SelectionResult:
    """Chooses the grid point minimising a classical criterion."""
    which = Criterion(which)
    return _argmin_result(Method(which.value), grid, criterion_trace(model, grid, which), model)


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------


def _fold_indices(ds: Dataset, mode: CVMode, k: int, seed: int) -> List[np.ndarray]:
    splitter = KFold(n_splits=k, shuffle=True, random_state=seed)
    if mode is CVMode.BY_OBSERVATION:
        if ds.n < k:
            raise ConfigurationError(f"{k}-fold cross-validation needs at least {k} observations")
        return [test for _, test in splitter.split(np.arange(ds.n))]
    groups = list(ds.wells.values())
    if len(groups) < k:
        raise ConfigurationError(
            f"Well-based {k}-fold cross-validation needs at least {k} wells, got {len(groups)}"
        )
    folds = []
    for _, test_wells in splitter.split(np.arange(len(groups))):
        folds.append(np.sort(np.concatenate([groups[i] for i in test_wells])))
    return folds


def cv_errors(
    design: SparseMatrix,
    reduced_penalty: SparseMatrix,
    y: np.ndarray,
    folds: Sequence[np.ndarray],
    lambdas: np.ndarray,
    workers: int = 1,
) -> Tuple[FloatArray, int]:
    """
    Total squared prediction error per λ, summed over the valid folds.

    Each fold is refit through its own decomposition of the retained rows.
    Folds whose decomposition fails numerically are skipped.

    Returns:
        Tuple of the error per λ and the number of invalid folds
    """
    n = design.shape[0]

    def fold_error(test: np.ndarray) -> Optional[FloatArray]:
        train = np.setdiff1d(np.arange(n), test, assume_unique=True)
        try:
            fold_model = decompose(design[train], reduced_penalty, y[train])
        except NumericalError as e:
            logger.warning(f"Cross-validation fold of {test.size} rows is invalid: {e.message}")
            return None
        predictions = design[test] @ solve_many(fold_model, lambdas)
        return np.sum((y[test][:, None] - predictions) ** 2, axis=0)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fold_error, folds))
    else:
        results = [fold_error(test) for test in folds]

    valid = [r for r in results if r is not None]
    invalid = len(results) - len(valid)
    if not valid:
        raise NumericalError("Every cross-validation fold was invalid")
    return np.sum(valid, axis=0), invalid


def cross_validate(
    ds: Dataset,
    spec: TensorBasisSpec,
    grid: LambdaGrid,
    mode: Union[CVMode, str] = CVMode.BY_OBSERVATION,
    k: int = 10,
    seed: int = 0,
    workers: int = 1,
    design: Optional[SparseMatrix] = None,
) -> SelectionResult:
    """
    K-fold cross-validation over the λ grid.

    Folds are formed by seeded uniform shuffling of observations
    (``by_observation``) or of whole wells (``by_well``). Knots come from
    ``spec`` and are therefore shared by all folds. A prebuilt design for
    ``ds`` may be passed to skip rebuilding it.

    Raises:
        ConfigurationError: If ``k < 2`` or there are too few observations/wells
        NumericalError: If every fold is invalid
    """
    mode = CVMode(mode)
    if k < 2:
        raise ConfigurationError(f"Cross-validation needs k >= 2 folds, got {k}")
    design = design if design is not None else tensor_design(ds, spec)
    reduced = reduce_penalty(difference_penalty(spec))
    y = apply_transform(ds)
    folds = _fold_indices(ds, mode, k, seed)
    scores, invalid = cv_errors(design, reduced, y, folds, grid.lambdas, workers=workers)
    method = Method.CV_OBS if mode is CVMode.BY_OBSERVATION else Method.CV_WELL
    result = _argmin_result(method, grid, scores, None)
    if invalid:
        msg = f"{method.value}: {invalid} of {len(folds)} folds were invalid and skipped"
        logger.warning(msg)
        result.warnings.append(msg)
    logger.info(f"{method.value}: log10(λ) = {result.log10_lambda:.3f}")
    return result


# ---------------------------------------------------------------------------
# Fitting façade
# ---------------------------------------------------------------------------


class SpatiotemporalSmoother:
    """
    Fits a tensor-product p-spline to a dataset and selects λ.

    The design, penalty and decomposition are built lazily on first use and
    cached, so all selection methods on one smoother share a single
    factorisation.

    Examples:
        >>> smoother = SpatiotemporalSmoother(ds, TensorBasisSpec.for_dataset(ds, (14, 8, 5)))
        >>> fit = smoother.fit(Method.MAP)
        >>> fit.lam > 0
        True
    """

    logger: logging.Logger = logging.getLogger("spacetime_pspline.selection.smoother")

    def __init__(
        self,
        ds: Dataset,
        spec: TensorBasisSpec,
        prior: Optional[PriorConfig] = None,
        grid: Optional[LambdaGrid] = None,
    ) -> None:
        self.dataset = ds
        self.spec = spec
        self.prior = prior or PriorConfig()
        self.grid = grid or LambdaGrid.default()
        self._design: Optional[SparseMatrix] = None
        self._reduced_penalty: Optional[SparseMatrix] = None
        self._response: Optional[FloatArray] = None
        self._model: Optional[DecomposedModel] = None
        self._trace: Optional[Dict[str, FloatArray]] = None
        self._hull: Optional[HullRegion] = None
        self._hull_checked = False

    @property
    def design(self) -> SparseMatrix:
        if self._design is None:
            self._design = tensor_design(self.dataset, self.spec)
        return self._design

    @property
    def reduced_penalty(self) -> SparseMatrix:
        if self._reduced_penalty is None:
            self._reduced_penalty = reduce_penalty(difference_penalty(self.spec))
        return self._reduced_penalty

    @property
    def response(self) -> FloatArray:
        if self._response is None:
            self._response = apply_transform(self.dataset)
        return self._response

    @property
    def model(self) -> DecomposedModel:
        if self._model is None:
            self.logger.debug("Building decomposition on first use")
            self._model = decompose(self.design, self.reduced_penalty, self.response)
        return self._model

    @property
    def hull(self) -> Optional[HullRegion]:
        """Hull of the well locations, or None when the locations are degenerate."""
        if self._hull is None and not self._hull_checked:
            self._hull_checked = True
            try:
                self._hull = convex_hull_region(self.dataset)
            except DegeneracyError as e:
                self.logger.warning(f"No convex hull for this dataset: {e.message}")
        return self._hull

    def score_trace(self) -> Dict[str, FloatArray]:
        """Log posterior, criteria and edf over the grid (CV columns start as NaN)."""
        if self._trace is None:
            model = self.model
            x = np.asarray(self.grid.log10_values)
            trace = {
                "log10_lambda": x,
                "map_logpost": log_posterior_grid(model, x, self.prior),
                "edf": np.array([edf(model, lam) for lam in self.grid.lambdas]),
            }
            for criterion in Criterion:
                trace[criterion.value] = criterion_trace(model, self.grid, criterion)
            trace["cv_obs"] = np.full(x.size, np.nan)
            trace["cv_well"] = np.full(x.size, np.nan)
            self._trace = trace
        return self._trace

    def select(self, method: Union[Method, str], seed: int = 0, folds: int = 10) -> SelectionResult:
        method = Method.parse(method) if isinstance(method, str) else method
        trace = self.score_trace()
        if method is Method.MAP:
            return map_lambda(self.model, self.grid, self.prior)
        if method is Method.BAYES_AVG:
            weights = average_weights(self.grid.log10_values, trace["map_logpost"])
            return SelectionResult(
                method=method,
                lam=None,
                scores=trace["map_logpost"],
                weights=weights,
                edf=float(np.dot(weights, trace["edf"])),
            )
        if method.is_cross_validation:
            mode = CVMode.BY_OBSERVATION if method is Method.CV_OBS else CVMode.BY_WELL
            result = cross_validate(
                self.dataset, self.spec, self.grid, mode, k=folds, seed=seed, design=self.design
            )
            trace[method.value] = result.scores
            return replace(result, edf=edf(self.model, result.lam))
        return criterion_select(self.model, self.grid, Criterion(method.value))

    def _result(self, method: Method, lam: Optional[float], coefficients: FloatArray, **extra) -> FitResult:
        model = self.model
        return FitResult(
            method=method,
            lam=lam,
            coefficients=coefficients,
            spec=self.spec,
            transform=self.dataset.transform,
            n=model.n,
            l_flat=model.l_flat,
            grid=self.grid,
            prior=self.prior,
            score_trace=dict(self.score_trace()),
            hull=self.hull,
            data_digest=self.dataset.digest(),
            **extra,
        )

    def fit_for_lambda(self, lam: float, method: Method = Method.MAP, **extra) -> FitResult:
        """A fit at a fixed λ, carrying the current score trace."""
        model = self.model
        lam = float(lam)
        a_star = self.prior.a + 0.5 * model.n
        b_star = self.prior.b + 0.5 * quad_form(model, lam)
        return self._result(
            method,
            lam,
            solve_many(model, np.array([lam]))[:, 0],
            edf=edf(model, lam),
            noise_scale=b_star / a_star,
            **extra,
        )

    def fit(self, method: Union[Method, str] = Method.MAP, seed: int = 0, folds: int = 10) -> FitResult:
        """
        Selects λ with the given method and returns the fitted surface.

        Model averaging returns the posterior-weighted coefficient vector,
        which gives the posterior-weighted prediction at every point.
        """
        method = Method.parse(method) if isinstance(method, str) else method
        selection = self.select(method, seed=seed, folds=folds)
        posterior = (
            posterior_summary(self.grid, selection.weights)
            if selection.weights is not None
            else None
        )
        if method is Method.BAYES_AVG:
            fit = self._result(
                method,
                None,
                solve_many(self.model, self.grid.lambdas) @ selection.weights,
                edf=float(selection.edf),
                weights=selection.weights,
                posterior=posterior,
                warnings=list(selection.warnings),
            )
        else:
            fit = self.fit_for_lambda(
                selection.lam,
                method=method,
                weights=selection.weights,
                posterior=posterior,
                warnings=list(selection.warnings),
            )
        self.logger.info(
            f"Fitted with {method.value}: "
            + (f"log10(λ)={np.log10(fit.lam):.3f}, " if fit.lam is not None else "averaged, ")
            + f"edf={fit.edf:.2f}"
        )
        return fit

    def with_covariance(self, fit: FitResult) -> FitResult:
        """Attaches ``(B'B + lam D'D)^-1`` to a fixed-λ fit for predictive sd."""
        if fit.lam is None:
            return fit
        return replace(fit, covariance=unscaled_covariance(self.model, fit.lam))


def score_trace_frame(fit: FitResult) -> pd.DataFrame:
    """Per-λ scores of a fit as a table, one row per grid point."""
    return pd.DataFrame({c: fit.score_trace.get(c, np.full(len(fit.grid), np.nan)) for c in TRACE_COLUMNS})


def select(
    ds: Dataset,
    spec: TensorBasisSpec,
    method: Union[Method, str] = Method.MAP,
    prior: Optional[PriorConfig] = None,
    grid: Optional[LambdaGrid] = None,
    seed: int = 0,
    folds: int = 10,
) -> FitResult:
    """Selects λ with ``method`` and returns the resulting fit."""
    return SpatiotemporalSmoother(ds, spec, prior=prior, grid=grid).fit(method, seed=seed, folds=folds)
