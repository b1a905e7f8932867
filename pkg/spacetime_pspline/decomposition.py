"""
λ-independent factorisation of the penalised least-squares problem.

The problem ``||y - B a||^2 + lam * ||D a||^2`` is rotated once so that every
quantity needed for a given smoothing parameter (coefficients, residual sum of
squares, the posterior quadratic form, log det(B'B + lam D'D) and the effective
degrees of freedom) costs O(p) or O(p r) to evaluate.

Steps, all computed once by :func:`decompose`:

1. QR of D' = (Q1, Q2) (R1; 0). The coefficients split into
   ``a1 = R1' Q1' a`` (penalised, proper prior) and ``a2 = Q2' a`` (the
   l_flat-dimensional null space of the penalty, flat prior).
2. Economy QR of B Q2 = Q̆1 R̆. The first l_flat rotated observations
   ``y̆1 = Q̆1' y`` are fitted exactly by ``a2``; B̆12 = R̆ is triangular.
3. SVD of the remaining block B̆21 = U L V', taken as
   ``(I - Q̆1 Q̆1') B Q1 R1'^-1``. It has the same singular values and V as
   the rotated block, and its left singular vectors are the columns of Q̆2 U
   expressed in observation space.

All three factorisations are dense LAPACK calls on arrays of at most
``n x p``.
"""

import logging
import threading
import time
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from spacetime_pspline.exceptions import (
    ConfigurationError,
    DomainError,
    SingularityError,
    UnidentifiableNullSpaceError,
)
from spacetime_pspline.types import FloatArray, SparseMatrix

logger = logging.getLogger("spacetime_pspline.decomposition")

RANK_TOLERANCE = 1e-10
# Reciprocal condition threshold for the flat-prior block B̆12.
INVERTIBILITY_TOLERANCE = 1e-10


class FactorizationCounter:
    """Thread-safe count of O(p^3) decompositions performed."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._count = 0

    def increment(self) -> None:
        with self._lock:
            self._count += 1

    @property
    def count(self) -> int:
        with self._lock:
            return self._count

    def reset(self) -> None:
        with self._lock:
            self._count = 0


FACTORIZATIONS = FactorizationCounter()


@dataclass(frozen=True, eq=False)
class DecomposedModel:
    """
    The λ-independent factorisation of a penalised spline problem.

    Attributes:
        n: Number of observations
        p: Number of coefficients
        rank_pen: Row rank r of the reduced penalty
        l_flat: Dimension of the flat-prior block, ``p - r``
        y1: Rotated responses fitted exactly by the flat block (length l_flat)
        uty2: ``U' y̆2``, the data-side ridge coordinates (length k)
        rho_sq: Energy of ``y̆2`` orthogonal to the columns of U
        b11: Rotated block B̆11, ``l_flat x r``
        b12: Rotated block B̆12, ``l_flat x l_flat`` upper triangular, invertible
        sigma: Singular values of B̆21, non-increasing, ``k = min(n - l_flat, r)``
        v: Right singular vectors of B̆21, ``r x k``
        u: Left singular vectors of B̆21 mapped into observation space, ``n x k``
        q1_obs: Orthonormal basis of the flat block's column space, ``n x l_flat``
        log_det_b12: ``log det(B̆12' B̆12)``
        log_det_jacobian: ``2 * sum(log |diag R1|)``, the reparametrisation Jacobian
        back_pen: ``Q1 R1'^-1``, maps the penalised block back, ``p x r``
        back_flat: ``Q2``, maps the flat block back, ``p x l_flat``
    """

    n: int
    p: int
    rank_pen: int
    l_flat: int
    y1: FloatArray
    uty2: FloatArray
    rho_sq: float
    b11: FloatArray
    b12: FloatArray
    sigma: FloatArray
    v: FloatArray
    u: FloatArray
    q1_obs: FloatArray
    log_det_b12: float
    log_det_jacobian: float
    back_pen: FloatArray
    back_flat: FloatArray

    @property
    def n_singular(self) -> int:
        return int(self.sigma.size)


@dataclass(frozen=True)
class LambdaSolution:
    """Everything :func:`solve_for_lambda` returns for one smoothing parameter."""

    lam: float
    coefficients: FloatArray
    rss: float
    quad_form: float
    log_det_pen_cov: float
    edf: float


def _as_csr(matrix: Union[SparseMatrix, np.ndarray]) -> SparseMatrix:
    return matrix if sp.isspmatrix_csr(matrix) else sp.csr_matrix(matrix)


def reduce_penalty(penalty: Union[SparseMatrix, np.ndarray]) -> SparseMatrix:
    """
    Replaces D by a full-row-rank matrix with the same quadratic form.

    Uses a column-pivoted QR decomposition ``D P = Q R`` and keeps the
    non-zero rows of R with the pivoting undone, so that
    ``D_red' D_red = D' D``.

    Raises:
        ConfigurationError: If D is all zero
    """
    penalty = _as_csr(penalty)
    if penalty.nnz == 0 or not np.any(penalty.data):
        raise ConfigurationError("The penalty matrix D is all zero")

    r_factor, pivots = la.qr(penalty.toarray(), mode="r", pivoting=True)
    diag = np.abs(np.diag(r_factor))
    rank = int(np.sum(diag > RANK_TOLERANCE * diag[0]))
    reduced = np.zeros((rank, penalty.shape[1]))
    reduced[:, pivots] = r_factor[:rank]
    result = sp.csr_matrix(reduced)
    result.eliminate_zeros()
    logger.debug(f"Reduced penalty from {penalty.shape[0]} rows to rank {rank}")
    return result


def decompose(
    design: Union[SparseMatrix, np.ndarray],
    reduced_penalty: Union[SparseMatrix, np.ndarray],
    y: np.ndarray,
) -> DecomposedModel:
    """
    Computes the λ-independent factorisation.

    Args:
        design: The ``n x p`` design matrix B
        reduced_penalty: A full-row-rank ``r x p`` penalty (see :func:`reduce_penalty`)
        y: Working response of length n

    Returns:
        DecomposedModel: The factorisation

    Raises:
        ConfigurationError: If the shapes are inconsistent
        UnidentifiableNullSpaceError: If the data cannot identify the
            unpenalised component (B̆12 numerically singular, or n < l_flat)
    """
    started = time.perf_counter()
    design = _as_csr(design)
    reduced_penalty = _as_csr(reduced_penalty)
    y = np.asarray(y, dtype=float).ravel()
    n, p = design.shape
    r = reduced_penalty.shape[0]
    if reduced_penalty.shape[1] != p:
        raise ConfigurationError(
            f"Penalty has {reduced_penalty.shape[1]} columns but the design has {p}"
        )
    if y.size != n:
        raise ConfigurationError(f"Response has {y.size} entries but the design has {n} rows")
    if r > p:
        raise ConfigurationError(f"Reduced penalty has {r} rows for {p} coefficients")
    l_flat = p - r
    if n < l_flat:
        raise UnidentifiableNullSpaceError(
            f"{n} observations cannot identify the {l_flat}-dimensional unpenalised component"
        )

    FACTORIZATIONS.increment()

    # QR of D' splits the coefficients into penalised and flat blocks.
    q_pen, r_pen = la.qr(reduced_penalty.T.toarray(), mode="full")
    r1 = r_pen[:r, :r]
    q1, q2 = q_pen[:, :r], q_pen[:, r:]
    back_pen = la.solve_triangular(r1, q1.T, lower=False).T  # Q1 R1'^-1
    log_det_jacobian = float(2.0 * np.sum(np.log(np.abs(np.diag(r1)))))

    design_pen = np.asarray(design @ back_pen)  # B̃1
    design_flat = np.asarray(design @ q2)  # B̃2

    if l_flat > 0:
        q1_obs, b12 = la.qr(design_flat, mode="economic")
        sv = la.svdvals(b12)
        if sv[0] == 0.0 or sv[-1] <= INVERTIBILITY_TOLERANCE * sv[0]:
            raise UnidentifiableNullSpaceError(
                "The data cannot identify the unpenalised component of the model "
                f"(reciprocal condition of the flat block {sv[-1] / max(sv[0], 1e-300):.2e}); "
                "observations may be concentrated at too few locations or times"
            )
        y1 = q1_obs.T @ y
        b11 = q1_obs.T @ design_pen
        residual_design = design_pen - q1_obs @ b11
        residual_y = y - q1_obs @ y1
        log_det_b12 = float(2.0 * np.sum(np.log(np.abs(np.diag(b12)))))
    else:
        q1_obs = np.zeros((n, 0))
        b12 = np.zeros((0, 0))
        y1 = np.zeros(0)
        b11 = np.zeros((0, r))
        residual_design = design_pen
        residual_y = y
        log_det_b12 = 0.0

    u_full, sigma_full, vt_full = la.svd(residual_design, full_matrices=False)
    k = min(n - l_flat, r)
    u = u_full[:, :k]
    sigma = sigma_full[:k]
    v = vt_full[:k].T
    uty2 = u.T @ residual_y
    rho_sq = float(np.sum((residual_y - u @ uty2) ** 2))

    model = DecomposedModel(
        n=n,
        p=p,
        rank_pen=r,
        l_flat=l_flat,
        y1=y1,
        uty2=uty2,
        rho_sq=rho_sq,
        b11=b11,
        b12=b12,
        sigma=sigma,
        v=v,
        u=u,
        q1_obs=q1_obs,
        log_det_b12=log_det_b12,
        log_det_jacobian=log_det_jacobian,
        back_pen=back_pen,
        back_flat=q2,
    )
    for arr in (y1, uty2, b11, b12, sigma, v, u, q1_obs, back_pen, q2):
        arr.setflags(write=False)
    logger.info(
        f"Decomposed n={n}, p={p}: rank_pen={r}, l_flat={l_flat}, "
        f"{k} singular values in {time.perf_counter() - started:.3f}s"
    )
    return model


def _check_lambdas(model: DecomposedModel, lambdas: np.ndarray) -> None:
    if np.any(~np.isfinite(lambdas)) or np.any(lambdas < 0):
        raise DomainError(f"Smoothing parameters must be finite and >= 0, got {lambdas.min()!r}")
    if np.any(lambdas == 0):
        sigma = model.sigma
        underdetermined = model.n_singular < model.rank_pen
        if underdetermined or sigma.size == 0 or sigma[-1] <= INVERTIBILITY_TOLERANCE * sigma[0]:
            raise SingularityError(
                "lambda = 0 leaves the penalised block underdetermined "
                f"({model.n_singular} usable singular values for rank {model.rank_pen})"
            )


def shrinkage_factors(model: DecomposedModel, lam: float) -> FloatArray:
    """
    Per-singular-value shrinkage factors ``sigma_i^2 / (sigma_i^2 + lam)``.

    Their sum plus ``l_flat`` is the effective degrees of freedom.
    """
    lam = float(lam)
    _check_lambdas(model, np.array([lam]))
    s2 = model.sigma**2
    return s2 / (s2 + lam)


def penalised_coordinates(model: DecomposedModel, lambdas: np.ndarray) -> Tuple[FloatArray, FloatArray]:
    """
    Coefficients in the rotated parametrisation for a vector of λ.

    Returns:
        Tuple of ``a1`` (``r x K``) and ``a2`` (``l_flat x K``)
    """
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    _check_lambdas(model, lambdas)
    s = model.sigma[:, None]
    a1 = model.v @ (s * model.uty2[:, None] / (s**2 + lambdas[None, :]))
    if model.l_flat:
        # the y̆1 block is fitted exactly by the flat coefficients
        a2 = la.solve_triangular(model.b12, model.y1[:, None] - model.b11 @ a1, lower=False)
    else:
        a2 = np.zeros((0, lambdas.size))
    return a1, a2


def solve_many(model: DecomposedModel, lambdas: np.ndarray) -> FloatArray:
    """Coefficient vectors in the original parametrisation, one column per λ."""
    a1, a2 = penalised_coordinates(model, lambdas)
    return model.back_pen @ a1 + model.back_flat @ a2


def fitted_values(model: DecomposedModel, lam: float) -> FloatArray:
    """Fitted values B â computed from the rotated blocks."""
    factors = shrinkage_factors(model, lam)
    return model.q1_obs @ model.y1 + model.u @ (factors * model.uty2)


def edf(model: DecomposedModel, lam: float) -> float:
    """Trace of the hat matrix, ``l_flat + sum(sigma^2 / (sigma^2 + lam))``."""
    return float(model.l_flat + np.sum(shrinkage_factors(model, lam)))


def rss(model: DecomposedModel, lam: float) -> float:
    """Residual sum of squares ``||y - B â||^2``."""
    lam = float(lam)
    s2 = model.sigma**2
    with np.errstate(invalid="ignore"):
        shrink = np.where(s2 + lam > 0, lam / (s2 + lam), 0.0)
    return float(model.rho_sq + np.sum((shrink * model.uty2) ** 2))


def quad_form(model: DecomposedModel, lam: float) -> float:
    """The posterior quadratic form ``y'(I - B(B'B + lam D'D)^-1 B')y``."""
    lam = float(lam)
    s2 = model.sigma**2
    with np.errstate(invalid="ignore"):
        shrink = np.where(s2 + lam > 0, lam / (s2 + lam), 0.0)
    return float(model.rho_sq + np.sum(shrink * model.uty2**2))


def log_det_pen_cov(model: DecomposedModel, lam: float) -> float:
    """
    ``log det(B'B + lam D'D)``.

    Penalised directions without a data-side singular value contribute
    ``log(lam)`` each.
    """
    lam = float(lam)
    missing = model.rank_pen - model.n_singular
    value = float(np.sum(np.log(model.sigma**2 + lam)))
    if missing:
        value += missing * np.log(lam)
    return value + model.log_det_b12 + model.log_det_jacobian


def solve_for_lambda(model: DecomposedModel, lam: float) -> LambdaSolution:
    """
    Evaluates the penalised fit for one smoothing parameter.

    Raises:
        DomainError: If ``lam < 0``
        SingularityError: If ``lam == 0`` and the ridge block is underdetermined
    """
    lam = float(lam)
    _check_lambdas(model, np.array([lam]))
    coefficients = solve_many(model, np.array([lam]))[:, 0]
    return LambdaSolution(
        lam=lam,
        coefficients=coefficients,
        rss=rss(model, lam),
        quad_form=quad_form(model, lam),
        log_det_pen_cov=log_det_pen_cov(model, lam),
        edf=edf(model, lam),
    )


def unscaled_covariance(model: DecomposedModel, lam: float) -> FloatArray:
    """
    ``(B'B + lam D'D)^-1`` assembled from the rotated blocks.

    In the coordinates ``(a1, z)`` with ``z = B̆11 a1 + B̆12 a2`` the precision
    is block diagonal: ``B̆21'B̆21 + lam I`` for ``a1`` and the identity for
    ``z``. A linear functional ``x'a`` equals ``u'a1 + w'z`` with
    ``w = B̆12^-T Q2' x`` and ``u = R1^-1 Q1' x - B̆11' w``.
    """
    lam = float(lam)
    _check_lambdas(model, np.array([lam]))
    if model.l_flat:
        flat_map = la.solve_triangular(model.b12, model.back_flat.T, trans="T", lower=False)
        pen_map = model.back_pen.T - model.b11.T @ flat_map
    else:
        flat_map = np.zeros((0, model.p))
        pen_map = model.back_pen.T
    s2 = model.sigma**2
    projected = model.v.T @ pen_map
    cov = projected.T @ (projected / (s2 + lam)[:, None]) + flat_map.T @ flat_map
    if model.n_singular < model.rank_pen:
        complement = pen_map - model.v @ projected
        cov += complement.T @ complement / lam
    return cov
