"""
B-spline bases, the sparse tensor-product design matrix and difference penalties.

Knots are equally spaced over each coordinate's range and extended by
``degree`` equally spaced exterior knots on each side, so a dimension with
``p`` basis functions has ``p - degree`` spans inside its range. Spans are
half-open except the last, which is closed at the top.

Tensor-product coefficients are flattened with dimension 1 fastest: the
coefficient of ``phi_j(s1) * phi_k(s2) * phi_l(t)`` sits at
``j + p1 * k + p1 * p2 * l``. The same ordering is used by
:func:`difference_penalty`.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import BSpline

from spacetime_pspline.data_model import Dataset
from spacetime_pspline.exceptions import ConfigurationError, DomainError
from spacetime_pspline.types import FloatArray, SparseMatrix

logger = logging.getLogger("spacetime_pspline.splines")

AXIS_NAMES: Tuple[str, ...] = ("s1", "s2", "t")

# Points within this fraction of the range outside [lo, hi] are clipped onto it.
_RANGE_SLACK = 1e-10


@dataclass(frozen=True)
class DimensionBasis:
    """B-spline configuration of one covariate dimension."""

    n_basis: int
    degree: int
    lo: float
    hi: float

    def knots(self) -> FloatArray:
        """Full knot vector of length ``n_basis + degree + 1``."""
        dx = (self.hi - self.lo) / (self.n_basis - self.degree)
        # built piecewise so that lo and hi are represented exactly
        return np.concatenate(
            (
                np.linspace(self.lo - self.degree * dx, self.lo - dx, self.degree),
                np.linspace(self.lo, self.hi, self.n_basis - self.degree + 1),
                np.linspace(self.hi + dx, self.hi + self.degree * dx, self.degree),
            )
        )


@dataclass(frozen=True)
class TensorBasisSpec:
    """
    Per-dimension B-spline bases plus the difference-penalty order.

    Attributes:
        dims: One :class:`DimensionBasis` per covariate, in order (s1, s2, t)
        penalty_order: Order q of the difference penalty (1 or 2)
    """

    dims: Tuple[DimensionBasis, ...]
    penalty_order: int = 1

    def __post_init__(self) -> None:
        if self.penalty_order not in (1, 2):
            raise ConfigurationError(
                f"Penalty order must be 1 or 2, got {self.penalty_order}"
            )
        for axis, dim in zip(AXIS_NAMES, self.dims):
            if dim.degree < 0:
                raise ConfigurationError(f"{axis}: spline degree must be >= 0, got {dim.degree}")
            if dim.n_basis < dim.degree + 1:
                raise ConfigurationError(
                    f"{axis}: {dim.n_basis} basis functions is fewer than "
                    f"degree + 1 = {dim.degree + 1}"
                )
            if self.penalty_order >= dim.n_basis:
                raise ConfigurationError(
                    f"{axis}: penalty order {self.penalty_order} must be smaller than "
                    f"the number of basis functions ({dim.n_basis})"
                )
            if not (np.isfinite(dim.lo) and np.isfinite(dim.hi) and dim.hi > dim.lo):
                raise ConfigurationError(
                    f"{axis}: knot range [{dim.lo}, {dim.hi}] is empty or not finite"
                )

    @classmethod
    def from_ranges(
        cls,
        counts: Sequence[int],
        ranges: Sequence[Tuple[float, float]],
        degree: int = 2,
        penalty_order: int = 1,
    ) -> "TensorBasisSpec":
        if len(counts) != len(ranges):
            raise ConfigurationError(
                f"Got {len(counts)} basis counts for {len(ranges)} dimensions"
            )
        dims = tuple(
            DimensionBasis(int(p), int(degree), float(lo), float(hi))
            for p, (lo, hi) in zip(counts, ranges)
        )
        return cls(dims=dims, penalty_order=int(penalty_order))

    @classmethod
    def for_dataset(
        cls,
        ds: Dataset,
        counts: Sequence[int],
        degree: int = 2,
        penalty_order: int = 1,
    ) -> "TensorBasisSpec":
        """Spec whose knot ranges are the data ranges of ``ds``."""
        if len(counts) != 3:
            raise ConfigurationError(f"Expected 3 basis counts (s1, s2, t), got {len(counts)}")
        ranges = [ds.ranges[axis] for axis in AXIS_NAMES]
        return cls.from_ranges(counts, ranges, degree=degree, penalty_order=penalty_order)

    @property
    def counts(self) -> Tuple[int, ...]:
        return tuple(d.n_basis for d in self.dims)

    @property
    def degree(self) -> int:
        return self.dims[0].degree

    @property
    def n_coefficients(self) -> int:
        return int(np.prod(self.counts))


def bspline_basis_1d(
    x: Union[Sequence[float], np.ndarray],
    p: int,
    degree: int,
    value_range: Tuple[float, float],
    axis: str = "x",
) -> SparseMatrix:
    """
    Evaluates ``p`` equally spaced B-splines of the given degree at ``x``.

    Args:
        x: Evaluation points, all within ``value_range``
        p: Number of basis functions
        degree: Spline degree (0 gives indicator functions)
        value_range: Knot range ``(lo, hi)``
        axis: Axis name used in error messages

    Returns:
        SparseMatrix: ``len(x) x p`` matrix; each row sums to one and has at
        most ``degree + 1`` non-zeros

    Raises:
        DomainError: If any point lies outside the knot range
    """
    lo, hi = float(value_range[0]), float(value_range[1])
    x = np.atleast_1d(np.asarray(x, dtype=float))
    slack = _RANGE_SLACK * (hi - lo)
    outside = np.flatnonzero((x < lo - slack) | (x > hi + slack) | ~np.isfinite(x))
    if outside.size:
        i = int(outside[0])
        raise DomainError(
            f"{axis}: point {x[i]!r} (index {i}) lies outside the knot range [{lo}, {hi}]",
            axis=axis,
        )
    x = np.clip(x, lo, hi)
    knots = DimensionBasis(p, degree, lo, hi).knots()
    basis = sp.csr_matrix(BSpline.design_matrix(x, knots, degree))
    basis.eliminate_zeros()
    return basis


def _row_kron(left: sp.spmatrix, right: sp.spmatrix) -> SparseMatrix:
    """Row-wise Kronecker product; columns of ``right`` vary fastest."""
    n_left, n_right = left.shape[1], right.shape[1]
    expanded_left = sp.kron(left, sp.csr_matrix(np.ones((1, n_right))), format="csr")
    expanded_right = sp.kron(sp.csr_matrix(np.ones((1, n_left))), right, format="csr")
    return sp.csr_matrix(expanded_left.multiply(expanded_right))


def marginal_bases(coords: np.ndarray, spec: TensorBasisSpec) -> List[SparseMatrix]:
    """One 1-D basis matrix per dimension for an ``(n, D)`` coordinate array."""
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if coords.shape[1] != len(spec.dims):
        raise DomainError(
            f"Expected {len(spec.dims)} coordinate columns, got {coords.shape[1]}"
        )
    return [
        bspline_basis_1d(coords[:, d], dim.n_basis, dim.degree, (dim.lo, dim.hi), axis=name)
        for d, (name, dim) in enumerate(zip(AXIS_NAMES, spec.dims))
    ]


def tensor_product(bases: Sequence[sp.spmatrix]) -> SparseMatrix:
    """Row-wise tensor product of marginal bases, first dimension fastest."""
    design = sp.csr_matrix(bases[-1])
    for basis in reversed(bases[:-1]):
        design = _row_kron(design, basis)
    design.sum_duplicates()
    design.eliminate_zeros()
    design.sort_indices()
    return design


def tensor_design(data: Union[Dataset, np.ndarray], spec: TensorBasisSpec) -> SparseMatrix:
    """
    Builds the sparse ``n x p`` tensor-product design matrix B.

    Args:
        data: A dataset, or an ``(n, 3)`` array of ``(s1, s2, t)`` coordinates
        spec: Basis configuration

    Raises:
        DomainError: If a coordinate lies outside its knot range
    """
    coords = data.coordinates if isinstance(data, Dataset) else data
    design = tensor_product(marginal_bases(coords, spec))
    logger.debug(
        f"Tensor design {design.shape[0]}x{design.shape[1]}, "
        f"density {design.nnz / max(1, design.shape[0] * design.shape[1]):.4f}"
    )
    return design


def difference_matrix(p: int, q: int) -> SparseMatrix:
    """The ``(p - q) x p`` matrix of q-th order differences."""
    return sp.csr_matrix(np.diff(np.eye(p), n=q, axis=0))


def difference_penalty(spec: TensorBasisSpec) -> SparseMatrix:
    """
    Builds the stacked difference penalty D.

    For each dimension d, D contains the q-th order difference operator acting
    along d and the identity along every other dimension, so that
    ``D'D = sum_d (I x ... x Delta_q'Delta_q x ... x I)``.

    Raises:
        ConfigurationError: If ``q >= p_d`` for some dimension
    """
    counts = spec.counts
    q = spec.penalty_order
    blocks = []
    for d, p_d in enumerate(counts):
        if q >= p_d:
            raise ConfigurationError(f"Penalty order {q} is not smaller than p_{d + 1} = {p_d}")
        before = int(np.prod(counts[:d]))  # faster-varying dimensions
        after = int(np.prod(counts[d + 1:]))
        block = sp.kron(
            sp.identity(after, format="csr"),
            sp.kron(difference_matrix(p_d, q), sp.identity(before, format="csr")),
            format="csr",
        )
        blocks.append(block)
    penalty = sp.csr_matrix(sp.vstack(blocks, format="csr"))
    penalty.eliminate_zeros()
    penalty.sort_indices()
    return penalty


def penalty_null_space_dim(spec: TensorBasisSpec) -> int:
    """
    Dimension of the null space of D'D.

    The null space is the intersection of the per-dimension null spaces, i.e.
    coefficient grids that are polynomials of degree < q in each index
    separately, which has dimension ``q ** D``.
    """
    return int(np.prod([min(spec.penalty_order, p) for p in spec.counts]))
