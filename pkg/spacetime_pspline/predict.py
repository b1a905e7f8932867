"""
Evaluation of fitted surfaces at points, on tensor grids and at time snapshots.

Grid evaluation never forms the full grid design matrix: the three 1-D bases
are evaluated once per axis and contracted with the coefficient array.
"""

import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from spacetime_pspline.data_model import HullRegion, atomic_path, back_transform
from spacetime_pspline.decomposition import DecomposedModel, unscaled_covariance
from spacetime_pspline.enums import Transform
from spacetime_pspline.exceptions import DomainError, UnsupportedCombinationError
from spacetime_pspline.selection import FitResult
from spacetime_pspline.splines import (
    TensorBasisSpec,
    bspline_basis_1d,
    marginal_bases,
    tensor_product,
)
from spacetime_pspline.types import FloatArray

logger = logging.getLogger("spacetime_pspline.predict")


@dataclass(frozen=True, eq=False)
class PredictionGrid:
    """
    Predictions on a regular ``s1 x s2 x t`` grid.

    Attributes:
        s1: Easting axis
        s2: Northing axis
        t: Time axis
        values: Working-scale predictions, shape ``(len(s1), len(s2), len(t))``
        transform: Transform of the working scale
        sd: Predictive standard deviations, same shape as ``values``
        in_hull: Spatial hull mask, shape ``(len(s1), len(s2))``
    """

    s1: FloatArray
    s2: FloatArray
    t: FloatArray
    values: FloatArray
    transform: Transform
    sd: Optional[FloatArray] = None
    in_hull: Optional[np.ndarray] = None

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.s1.size, self.s2.size, self.t.size)

    @property
    def original_values(self) -> FloatArray:
        return back_transform(self.values, self.transform)

    def snapshot(self, times: Sequence[float]) -> "PredictionGrid":
        """
        Restricts the grid to the given time values, which must lie on the t axis.

        Raises:
            DomainError: If a time is not one of the grid's t values
        """
        idx = []
        for value in np.atleast_1d(np.asarray(times, dtype=float)):
            hits = np.flatnonzero(np.isclose(self.t, value, rtol=0.0, atol=1e-12 * max(1.0, abs(value))))
            if hits.size == 0:
                raise DomainError(f"t = {value!r} is not on the prediction grid", axis="t")
            idx.append(int(hits[0]))
        return replace(
            self,
            t=self.t[idx],
            values=self.values[:, :, idx],
            sd=None if self.sd is None else self.sd[:, :, idx],
        )

    def to_frame(self) -> pd.DataFrame:
        """
        Long-format table with columns ``s1, s2, t, pred, pred_original[, sd], in_hull``.

        Rows are ordered by t, then s2, then s1.
        """
        t_idx, s2_idx, s1_idx = np.meshgrid(
            np.arange(self.t.size), np.arange(self.s2.size), np.arange(self.s1.size), indexing="ij"
        )
        t_idx, s2_idx, s1_idx = t_idx.ravel(), s2_idx.ravel(), s1_idx.ravel()
        pred = self.values[s1_idx, s2_idx, t_idx]
        frame = {
            "s1": self.s1[s1_idx],
            "s2": self.s2[s2_idx],
            "t": self.t[t_idx],
            "pred": pred,
            "pred_original": back_transform(pred, self.transform),
        }
        if self.sd is not None:
            frame["sd"] = self.sd[s1_idx, s2_idx, t_idx]
        mask = self.in_hull if self.in_hull is not None else np.ones((self.s1.size, self.s2.size), bool)
        frame["in_hull"] = mask[s1_idx, s2_idx]
        return pd.DataFrame(frame)

    def to_csv(self, path: str) -> None:
        with atomic_path(path) as tmp:
            self.to_frame().to_csv(tmp, index=False, float_format="%.17g")
        logger.info(f"Wrote {int(np.prod(self.shape))} grid predictions to {path}")


def grid_axes(
    spec: TensorBasisSpec, sizes: Sequence[int] = (50, 50, 4)
) -> Tuple[FloatArray, FloatArray, FloatArray]:
    """Equally spaced axes spanning each knot range."""
    if len(sizes) != 3 or any(int(k) < 1 for k in sizes):
        raise DomainError(f"Grid sizes must be three positive integers, got {tuple(sizes)}")
    s1, s2, t = (
        np.linspace(dim.lo, dim.hi, int(k)) if int(k) > 1 else np.array([(dim.lo + dim.hi) / 2])
        for dim, k in zip(spec.dims, sizes)
    )
    return s1, s2, t


def predict_points(
    fit: FitResult,
    points: np.ndarray,
    spec: Optional[TensorBasisSpec] = None,
    original_scale: bool = False,
) -> FloatArray:
    """
    Evaluates the fitted surface at ``(n, 3)`` points ``(s1, s2, t)``.

    Args:
        fit: Fitted surface
        points: Evaluation points inside the knot ranges
        spec: Basis configuration, defaults to the one stored in the fit
        original_scale: Whether to back-transform to the original scale

    Raises:
        DomainError: If a point lies outside its knot range
    """
    spec = spec or fit.spec
    try:
        design = tensor_product(marginal_bases(points, spec))
    except DomainError as e:
        logger.error(f"Prediction outside the fitted domain: {e.message}")
        raise
    values = np.asarray(design @ fit.coefficients)
    return back_transform(values, fit.transform) if original_scale else values


def fitted_surface(fit: FitResult) -> Callable[[np.ndarray], FloatArray]:
    """The fitted surface as a callable on ``(n, 3)`` points (working scale)."""
    return lambda points: predict_points(fit, points)


def _axis_bases(spec: TensorBasisSpec, axes: Sequence[np.ndarray]):
    names = ("s1", "s2", "t")
    return [
        bspline_basis_1d(axis, dim.n_basis, dim.degree, (dim.lo, dim.hi), axis=name).toarray()
        for name, dim, axis in zip(names, spec.dims, axes)
    ]


def _coefficient_cube(fit: FitResult, spec: TensorBasisSpec) -> FloatArray:
    p1, p2, p3 = spec.counts
    # dimension 1 varies fastest in the flat ordering
    return np.asarray(fit.coefficients).reshape(p3, p2, p1)


def _sd_from_covariance(covariance: FloatArray, scale: float, design) -> FloatArray:
    product = np.asarray(design @ covariance)
    variance = scale * np.asarray(design.multiply(product).sum(axis=1)).ravel()
    return np.sqrt(np.maximum(variance, 0.0))


def _require_covariance(fit: FitResult, model: Optional[DecomposedModel]) -> FloatArray:
    if fit.is_model_average:
        raise UnsupportedCombinationError(
            "Predictive standard deviations are only available for fixed-λ fits, "
            "not for model-averaged fits"
        )
    if fit.covariance is not None:
        return fit.covariance
    if model is None:
        raise UnsupportedCombinationError(
            "The fit carries no covariance; pass its decomposition to compute standard deviations"
        )
    return unscaled_covariance(model, fit.lam)


def predictive_sd(
    fit: FitResult,
    points: np.ndarray,
    model: Optional[DecomposedModel] = None,
    spec: Optional[TensorBasisSpec] = None,
) -> FloatArray:
    """
    Posterior standard deviation of the surface at fixed λ.

    Returns ``sqrt((b*/a*) x' (B'B + lam D'D)^-1 x)`` per point, the scale of
    the Student-t marginal of ``m(x)`` with ``a* = a + n/2`` and
    ``b* = b + y'(I - S(lam))y / 2``. λ is held fixed, so the spread does not
    include uncertainty about λ. Values are on the working scale.

    Raises:
        UnsupportedCombinationError: For model-averaged fits, or when no
            covariance is stored and no decomposition is given
        DomainError: If a point lies outside its knot range
    """
    covariance = _require_covariance(fit, model)
    spec = spec or fit.spec
    design = tensor_product(marginal_bases(points, spec))
    return _sd_from_covariance(covariance, fit.noise_scale, design)


def predict_grid(
    fit: FitResult,
    s1: Sequence[float],
    s2: Sequence[float],
    t: Sequence[float],
    hull: Optional[HullRegion] = None,
    with_sd: bool = False,
    model: Optional[DecomposedModel] = None,
    spec: Optional[TensorBasisSpec] = None,
) -> PredictionGrid:
    """
    Evaluates the fitted surface on the tensor grid ``s1 x s2 x t``.

    Raises:
        DomainError: If an axis value lies outside its knot range
        UnsupportedCombinationError: If ``with_sd`` is requested for a model-averaged fit
    """
    spec = spec or fit.spec
    axes = [np.atleast_1d(np.asarray(a, dtype=float)) for a in (s1, s2, t)]
    covariance = _require_covariance(fit, model) if with_sd else None
    try:
        b1, b2, b3 = _axis_bases(spec, axes)
    except DomainError as e:
        logger.error(f"Prediction grid outside the fitted domain: {e.message}")
        raise
    values = np.einsum("aj,bk,cl,lkj->abc", b1, b2, b3, _coefficient_cube(fit, spec), optimize=True)

    sd = None
    if covariance is not None:
        sd = np.empty_like(values)
        g1, g2 = np.meshgrid(axes[0], axes[1], indexing="ij")
        # one time slice at a time keeps the design at |s1| x |s2| rows
        for c, tc in enumerate(axes[2]):
            points = np.column_stack([g1.ravel(), g2.ravel(), np.full(g1.size, tc)])
            design = tensor_product(marginal_bases(points, spec))
            sd[:, :, c] = _sd_from_covariance(covariance, fit.noise_scale, design).reshape(g1.shape)

    in_hull = None
    if hull is not None:
        g1, g2 = np.meshgrid(axes[0], axes[1], indexing="ij")
        in_hull = hull.contains(g1, g2)

    logger.info(f"Evaluated {axes[0].size}x{axes[1].size}x{axes[2].size} prediction grid")
    return PredictionGrid(
        s1=axes[0], s2=axes[1], t=axes[2], values=values, transform=fit.transform, sd=sd, in_hull=in_hull
    )
