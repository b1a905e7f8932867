"""
Ingestion, validation, transformation and indexing of well-sample data.

The canonical input is a CSV file with header ``well_id,s1,s2,t,value``.
Times may be numeric or ISO-8601 dates; dates are converted to days since the
earliest sample. Observations keep their file order and repeat samples of the
same well at the same time are retained as distinct observations.
"""

import hashlib
import logging
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.spatial import ConvexHull

from spacetime_pspline.enums import Transform
from spacetime_pspline.exceptions import DataError, DegeneracyError, SchemaError
from spacetime_pspline.types import FloatArray, IntArray

logger = logging.getLogger("spacetime_pspline.data_model")

REQUIRED_COLUMNS: Tuple[str, ...] = ("well_id", "s1", "s2", "t", "value")


@dataclass(frozen=True)
class Observation:
    """A single concentration measurement at a well."""

    well_id: str
    s1: float
    s2: float
    t: float
    value: float


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Well-indexed spatiotemporal observations.

    Columns are held as read-only numpy arrays in file order. ``wells`` maps
    each well id to the indices of its observations, in order of first
    appearance of the well.

    Attributes:
        well_id: Well identifier per observation
        s1: Easting per observation
        s2: Northing per observation
        t: Time per observation (days or normalised units)
        value: Raw, untransformed value per observation
        transform: Transform applied to obtain the working response
        wells: Map from well id to observation indices
        time_origin: ISO date of ``t == 0`` when times were parsed from dates
    """

    well_id: np.ndarray
    s1: FloatArray
    s2: FloatArray
    t: FloatArray
    value: FloatArray
    transform: Transform = Transform.LOG1P
    wells: Mapping[str, IntArray] = field(default_factory=dict)
    time_origin: Optional[str] = None

    @classmethod
    def from_arrays(
        cls,
        well_id: Sequence,
        s1: Iterable[float],
        s2: Iterable[float],
        t: Iterable[float],
        value: Iterable[float],
        transform: Union[Transform, str] = Transform.LOG1P,
        time_origin: Optional[str] = None,
    ) -> "Dataset":
        """
        Builds and validates a dataset from column arrays.

        Raises:
            DataError: If the columns differ in length, the dataset is empty,
                any entry is non-finite, or a value is negative under log1p
        """
        transform = Transform(transform)
        ids = np.asarray([str(w) for w in well_id], dtype=object)
        columns = {
            name: np.array(list(col) if not isinstance(col, np.ndarray) else col, dtype=float)
            for name, col in (("s1", s1), ("s2", s2), ("t", t), ("value", value))
        }
        n = len(ids)
        if n == 0:
            raise DataError("Dataset must contain at least one observation")
        for name, col in columns.items():
            if col.shape != (n,):
                raise DataError(f"Column '{name}' has {col.size} entries, expected {n}")
            bad = np.flatnonzero(~np.isfinite(col))
            if bad.size:
                row = int(bad[0]) + 1
                raise DataError(
                    f"Row {row}: non-finite {name} ({col[bad[0]]!r})", row=row, axis=name
                )
        if transform is Transform.LOG1P:
            negative = np.flatnonzero(columns["value"] < 0)
            if negative.size:
                row = int(negative[0]) + 1
                raise DataError(
                    f"Row {row}: negative value {columns['value'][negative[0]]!r} "
                    "is outside the domain of log(y + 1)",
                    row=row,
                    axis="value",
                )

        groups: Dict[str, List[int]] = {}
        for i, w in enumerate(ids):
            groups.setdefault(w, []).append(i)
        wells: Dict[str, IntArray] = {w: np.asarray(idx, dtype=np.int64) for w, idx in groups.items()}

        for arr in list(columns.values()) + [ids] + list(wells.values()):
            arr.setflags(write=False)

        return cls(
            well_id=ids,
            s1=columns["s1"],
            s2=columns["s2"],
            t=columns["t"],
            value=columns["value"],
            transform=transform,
            wells=wells,
            time_origin=time_origin,
        )

    @property
    def n(self) -> int:
        return int(self.value.size)

    @property
    def observations(self) -> List[Observation]:
        return [
            Observation(str(w), float(a), float(b), float(c), float(v))
            for w, a, b, c, v in zip(self.well_id, self.s1, self.s2, self.t, self.value)
        ]

    @property
    def coordinates(self) -> FloatArray:
        """Observation coordinates as an ``(n, 3)`` array ``(s1, s2, t)``."""
        return np.column_stack([self.s1, self.s2, self.t])

    @property
    def ranges(self) -> Dict[str, Tuple[float, float]]:
        """Bounding range ``(min, max)`` of each coordinate."""
        return {
            name: (float(col.min()), float(col.max()))
            for name, col in (("s1", self.s1), ("s2", self.s2), ("t", self.t))
        }

    def well_index(self) -> IntArray:
        """Integer well label per observation, numbered by first appearance."""
        labels = np.empty(self.n, dtype=np.int64)
        for k, idx in enumerate(self.wells.values()):
            labels[idx] = k
        return labels

    def subset(self, rows: Sequence[int]) -> "Dataset":
        """Returns a new dataset holding the given rows, in the given order."""
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset.from_arrays(
            self.well_id[rows],
            self.s1[rows],
            self.s2[rows],
            self.t[rows],
            self.value[rows],
            transform=self.transform,
            time_origin=self.time_origin,
        )

    def without_wells(self, well_ids: Iterable[str]) -> "Dataset":
        """
        Returns a copy of the dataset with all observations of the given wells removed.

        Raises:
            DataError: If a well id is unknown or no observation would remain
        """
        drop = {str(w) for w in well_ids}
        unknown = sorted(drop - set(self.wells))
        if unknown:
            raise DataError(f"Unknown well id(s): {', '.join(unknown)}")
        keep = np.flatnonzero([w not in drop for w in self.well_id])
        if keep.size == 0:
            raise DataError("Removing the requested wells leaves no observations")
        logger.info(f"Removed {len(drop)} well(s); {keep.size} of {self.n} observations remain")
        return self.subset(keep)

    def digest(self) -> str:
        """SHA-256 over the well ids, coordinates, raw values and transform."""
        h = hashlib.sha256()
        for col in (self.s1, self.s2, self.t, self.value):
            h.update(np.ascontiguousarray(col, dtype="<f8").tobytes())
        h.update("\x1f".join(self.well_id.tolist()).encode("utf-8"))
        h.update(self.transform.value.encode("utf-8"))
        return h.hexdigest()

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "well_id": self.well_id,
                "s1": self.s1,
                "s2": self.s2,
                "t": self.t,
                "value": self.value,
            }
        )

    def to_csv(self, path: str) -> None:
        """Writes the dataset in the canonical CSV format (numeric times)."""
        with atomic_path(path) as tmp:
            self.to_frame().to_csv(tmp, index=False, float_format="%.17g")
        logger.info(f"Wrote {self.n} observations to {path}")


def _parse_times(raw: pd.Series) -> Tuple[FloatArray, Optional[str]]:
    numeric = pd.to_numeric(raw, errors="coerce")
    if not numeric.isna().any():
        return numeric.to_numpy(dtype=float), None

    dates = pd.to_datetime(raw, errors="coerce")
    bad = np.flatnonzero(dates.isna().to_numpy())
    if bad.size:
        row = int(bad[0]) + 1
        raise DataError(f"Row {row}: cannot parse t value {raw.iloc[bad[0]]!r}", row=row, axis="t")
    origin = dates.min()
    days = (dates - origin) / pd.Timedelta(days=1)
    return days.to_numpy(dtype=float), origin.date().isoformat()


def load_csv(
    path: str,
    columns: Optional[Mapping[str, str]] = None,
    transform: Union[Transform, str] = Transform.LOG1P,
) -> Dataset:
    """
    Loads a dataset from a CSV file.

    Args:
        path: Path to a UTF-8 CSV file with a header row
        columns: Optional mapping from canonical column names (``well_id``,
            ``s1``, ``s2``, ``t``, ``value``) to the names used in the file
        transform: Transform to apply to the values

    Returns:
        Dataset: Observations in file order, grouped by well

    Raises:
        SchemaError: If a required column is missing
        DataError: If a field cannot be parsed, is non-finite, or a value is
            negative under log1p; the message names the 1-based data row

    Examples:
        >>> ds = load_csv("wells.csv")
        >>> ds.n, len(ds.wells)
        (1402, 29)
    """
    mapping = {name: name for name in REQUIRED_COLUMNS}
    if columns:
        mapping.update(columns)

    try:
        frame = pd.read_csv(path, dtype=str, encoding="utf-8", keep_default_na=False)
    except FileNotFoundError:
        raise DataError(f"Input file not found: {path}")

    missing = [canonical for canonical, actual in mapping.items() if actual not in frame.columns]
    if missing:
        error_msg = f"{path}: missing required column(s): {', '.join(missing)}"
        logger.error(error_msg)
        raise SchemaError(error_msg)

    numeric = {}
    for name in ("s1", "s2", "value"):
        raw = frame[mapping[name]].str.strip()
        parsed = pd.to_numeric(raw, errors="coerce")
        bad = np.flatnonzero(parsed.isna().to_numpy())
        if bad.size:
            row = int(bad[0]) + 1
            error_msg = f"{path}: row {row}: cannot parse {name} value {raw.iloc[bad[0]]!r}"
            logger.error(error_msg)
            raise DataError(error_msg, row=row, axis=name)
        numeric[name] = parsed.to_numpy(dtype=float)

    t, origin = _parse_times(frame[mapping["t"]].str.strip())

    try:
        ds = Dataset.from_arrays(
            frame[mapping["well_id"]].str.strip().tolist(),
            numeric["s1"],
            numeric["s2"],
            t,
            numeric["value"],
            transform=transform,
            time_origin=origin,
        )
    except DataError as e:
        logger.error(f"{path}: {e.message}")
        raise

    logger.info(f"Loaded {ds.n} observations from {len(ds.wells)} wells ({path})")
    return ds


def apply_transform(ds: Dataset) -> FloatArray:
    """
    Returns the working response of a dataset.

    Under ``log1p`` this is ``log(value + 1)`` element-wise, otherwise the raw
    values.

    Raises:
        DataError: If a value is negative under log1p
    """
    if ds.transform is Transform.LOG1P:
        if np.any(ds.value < 0):
            row = int(np.flatnonzero(ds.value < 0)[0]) + 1
            raise DataError(f"Row {row}: negative value under log1p", row=row, axis="value")
        return np.log1p(ds.value)
    return np.array(ds.value, dtype=float)


def back_transform(working: np.ndarray, transform: Union[Transform, str]) -> np.ndarray:
    """Maps working-scale values back to the original scale."""
    if Transform(transform) is Transform.LOG1P:
        return np.expm1(working)
    return np.asarray(working, dtype=float)


@dataclass(frozen=True)
class HullRegion:
    """
    Spatial convex hull of the well locations times the sampled time interval.

    Attributes:
        vertices: Hull vertices, counter-clockwise, shape ``(m, 2)``
        equations: Facet inequalities ``a·x + b <= 0`` for interior points
        t_interval: ``(min t, max t)`` of the observations
    """

    vertices: FloatArray
    equations: FloatArray
    t_interval: Tuple[float, float]

    @property
    def area(self) -> float:
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    @property
    def volume(self) -> float:
        """Area times length of the time interval."""
        return self.area * (self.t_interval[1] - self.t_interval[0])

    def contains(self, s1: np.ndarray, s2: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Boolean mask of points inside or on the hull."""
        pts = np.column_stack([np.ravel(s1), np.ravel(s2)])
        scale = max(1.0, float(np.abs(self.vertices).max()))
        inside = np.all(pts @ self.equations[:, :2].T + self.equations[:, 2] <= tol * scale, axis=1)
        return inside.reshape(np.shape(s1))

    def contains_time(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t)
        return (t >= self.t_interval[0]) & (t <= self.t_interval[1])


def convex_hull_region(ds: Dataset) -> HullRegion:
    """
    Computes the convex hull of the distinct well locations and the time interval.

    Raises:
        DegeneracyError: If fewer than three distinct, non-collinear locations exist
    """
    points = np.unique(np.column_stack([ds.s1, ds.s2]), axis=0)
    if points.shape[0] < 3:
        raise DegeneracyError(
            f"Convex hull needs at least 3 distinct well locations, got {points.shape[0]}"
        )
    centred = points - points.mean(axis=0)
    if np.linalg.matrix_rank(centred, tol=1e-12 * max(1.0, np.abs(centred).max())) < 2:
        raise DegeneracyError("Well locations are collinear; the spatial hull is degenerate")

    hull = ConvexHull(points)
    # For 2-D input qhull returns the vertices in counter-clockwise order.
    vertices = points[hull.vertices]
    return HullRegion(
        vertices=vertices,
        equations=hull.equations,
        t_interval=(float(ds.t.min()), float(ds.t.max())),
    )


@contextmanager
def atomic_path(path: str) -> Iterator[str]:
    """
    Yields a temporary path next to ``path`` and renames it into place on success.

    Examples:
        >>> with atomic_path("results/bench_results.csv") as tmp:
        ...     frame.to_csv(tmp, index=False)
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
