"""
Synthetic solute-transport data.

A concentration field is advected and diffused by a steady groundwater flow
(``dy/dt = D laplacian(y) - psi . grad(y)``, with ``psi`` the transport
velocity) on a regular grid, then sampled at wells with multiplicative,
within-well correlated noise. Three well scenarios are provided:

1. 29 wells from the packaged layout, 1402 samples on jittered regular cadences
2. 280 uniformly placed wells, 1402 samples
3. the scenario-1 wells with only 100 samples
"""

import json
import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.interpolate import RegularGridInterpolator

from spacetime_pspline.data_model import Dataset, HullRegion, atomic_path
from spacetime_pspline.enums import BoundaryCondition, Transform
from spacetime_pspline.exceptions import (
    ConfigurationError,
    DataError,
    DomainError,
    StabilityError,
)
from spacetime_pspline.predict import predict_grid, predict_points
from spacetime_pspline.selection import FitResult
from spacetime_pspline.types import FloatArray, GroundTruthHeader

logger = logging.getLogger("spacetime_pspline.simulate")

WELL_LAYOUT_PATH = Path(__file__).parent / "data" / "scenario_wells.csv"

DEFAULT_DOMAIN: Tuple[float, float, float, float] = (0.0, 1.4, 0.0, 0.8)
DEFAULT_DIFFUSION = 0.002
CFL_SAFETY = 0.5
# Blow-up threshold relative to the largest initial concentration.
STABILITY_LIMIT = 1e6

TRUTH_MAGIC = b"STPTRUTH"

SCENARIO_SIZES = {1: (1402, 29), 2: (1402, 280), 3: (100, 29)}


@dataclass(frozen=True)
class HeadSurface:
    """
    Synthetic hydraulic head: two planar trends plus one Gaussian bump.

    ``h(s) = -slope1 * s1 + slope2 * s2 + amplitude * exp(-|s - centre|^2 / (2 width^2))``
    """

    slope1: float
    slope2: float
    amplitude: float
    centre: Tuple[float, float]
    width: float

    def _bump(self, s1: np.ndarray, s2: np.ndarray) -> np.ndarray:
        r2 = (s1 - self.centre[0]) ** 2 + (s2 - self.centre[1]) ** 2
        return self.amplitude * np.exp(-r2 / (2.0 * self.width**2))

    def head(self, s1: np.ndarray, s2: np.ndarray) -> np.ndarray:
        return -self.slope1 * s1 + self.slope2 * s2 + self._bump(s1, s2)

    def gradient(self, s1: np.ndarray, s2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        bump = self._bump(s1, s2)
        w2 = self.width**2
        return (
            -self.slope1 - (s1 - self.centre[0]) / w2 * bump,
            self.slope2 - (s2 - self.centre[1]) / w2 * bump,
        )


@dataclass(frozen=True, eq=False)
class FlowModel:
    """
    Steady flow and diffusion on a rectangular domain.

    Velocities are given at the nodes of a regular grid spanning ``domain``;
    the grid shape is the shape of ``psi1``.

    Attributes:
        diffusion: Diffusion coefficient, > 0
        psi1: Transport velocity along s1, shape ``(n1, n2)``
        psi2: Transport velocity along s2, shape ``(n1, n2)``
        domain: ``(s1_lo, s1_hi, s2_lo, s2_hi)``
        boundary: Boundary condition on all four sides
        head: Head surface the velocities were derived from, if any
        conductivity: Scale κ in ``psi = -κ grad(h)``, if derived from a head
    """

    diffusion: float
    psi1: FloatArray
    psi2: FloatArray
    domain: Tuple[float, float, float, float] = DEFAULT_DOMAIN
    boundary: BoundaryCondition = BoundaryCondition.ZERO_FLUX
    head: Optional[HeadSurface] = None
    conductivity: Optional[float] = None

    def __post_init__(self) -> None:
        if not (self.diffusion > 0 and np.isfinite(self.diffusion)):
            raise ConfigurationError(f"Diffusion coefficient must be positive, got {self.diffusion}")
        psi1 = np.asarray(self.psi1, dtype=float)
        psi2 = np.asarray(self.psi2, dtype=float)
        if psi1.ndim != 2 or psi1.shape != psi2.shape or min(psi1.shape) < 3:
            raise ConfigurationError(
                f"Velocity fields must be matching 2-D grids of at least 3x3, "
                f"got {psi1.shape} and {psi2.shape}"
            )
        if not (np.all(np.isfinite(psi1)) and np.all(np.isfinite(psi2))):
            raise ConfigurationError("Velocity fields must be finite")
        lo1, hi1, lo2, hi2 = self.domain
        if not (hi1 > lo1 and hi2 > lo2):
            raise ConfigurationError(f"Empty domain {self.domain}")
        object.__setattr__(self, "psi1", psi1)
        object.__setattr__(self, "psi2", psi2)
        object.__setattr__(self, "boundary", BoundaryCondition(self.boundary))

    @classmethod
    def uniform(
        cls,
        velocity: Tuple[float, float],
        diffusion: float,
        shape: Tuple[int, int] = (100, 100),
        domain: Tuple[float, float, float, float] = DEFAULT_DOMAIN,
        boundary: BoundaryCondition = BoundaryCondition.ZERO_FLUX,
    ) -> "FlowModel":
        """A flow with constant velocity everywhere."""
        return cls(
            diffusion=diffusion,
            psi1=np.full(shape, float(velocity[0])),
            psi2=np.full(shape, float(velocity[1])),
            domain=domain,
            boundary=boundary,
        )

    @property
    def shape(self) -> Tuple[int, int]:
        return self.psi1.shape

    @property
    def s1(self) -> FloatArray:
        return np.linspace(self.domain[0], self.domain[1], self.shape[0])

    @property
    def s2(self) -> FloatArray:
        return np.linspace(self.domain[2], self.domain[3], self.shape[1])

    @property
    def spacing(self) -> Tuple[float, float]:
        return (
            (self.domain[1] - self.domain[0]) / (self.shape[0] - 1),
            (self.domain[3] - self.domain[2]) / (self.shape[1] - 1),
        )

    def max_stable_step(self) -> float:
        """Largest explicit time step for which the scheme stays positive."""
        dx, dy = self.spacing
        rate = (
            2.0 * self.diffusion * (1.0 / dx**2 + 1.0 / dy**2)
            + np.abs(self.psi1).max() / dx
            + np.abs(self.psi2).max() / dy
        )
        return 1.0 / rate


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """
    Concentration on a regular ``s1 x s2 x t`` grid with trilinear interpolation.

    Attributes:
        s1: Easting nodes
        s2: Northing nodes
        t: Output times
        values: Concentrations, shape ``(len(s1), len(s2), len(t))``, >= 0
    """

    s1: FloatArray
    s2: FloatArray
    t: FloatArray
    values: FloatArray
    _interpolator: RegularGridInterpolator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        values = np.maximum(np.asarray(self.values, dtype=float), 0.0)
        object.__setattr__(self, "values", values)
        object.__setattr__(
            self,
            "_interpolator",
            RegularGridInterpolator((self.s1, self.s2, self.t), values, method="linear"),
        )

    @property
    def domain(self) -> Tuple[float, float, float, float]:
        return (float(self.s1[0]), float(self.s1[-1]), float(self.s2[0]), float(self.s2[-1]))

    def __call__(self, points: np.ndarray) -> FloatArray:
        """
        Trilinear interpolation at ``(n, 3)`` points.

        Raises:
            DomainError: If a point lies outside the grid
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        for d, (axis, name) in enumerate(((self.s1, "s1"), (self.s2, "s2"), (self.t, "t"))):
            outside = (points[:, d] < axis[0]) | (points[:, d] > axis[-1])
            if outside.any():
                i = int(np.flatnonzero(outside)[0])
                raise DomainError(
                    f"{name}: point {points[i, d]!r} lies outside the ground-truth grid", axis=name
                )
        return self._interpolator(points)

    def header(self) -> GroundTruthHeader:
        return GroundTruthHeader(
            dims=list(self.values.shape),
            domain=list(self.domain),
            times=[float(x) for x in self.t],
            dtype="<f8",
        )

    def save(self, path: Union[str, Path]) -> None:
        """
        Writes the binary ground-truth format.

        Layout: 8-byte magic ``STPTRUTH``, little-endian uint32 header length,
        UTF-8 JSON header (``dims``, ``domain``, ``times``, ``dtype``), then the
        values as C-order little-endian float64.
        """
        header = json.dumps(self.header(), sort_keys=True).encode("utf-8")
        with atomic_path(str(path)) as tmp, open(tmp, "wb") as f:
            f.write(TRUTH_MAGIC)
            f.write(struct.pack("<I", len(header)))
            f.write(header)
            f.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())
        logger.info(f"Wrote ground truth {self.values.shape} to {path}")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "GroundTruth":
        """
        Reads a file written by :meth:`save`.

        Raises:
            DataError: If the file is not a ground-truth file or is truncated
        """
        raw = Path(path).read_bytes()
        if raw[: len(TRUTH_MAGIC)] != TRUTH_MAGIC:
            raise DataError(f"{path}: not a ground-truth file")
        offset = len(TRUTH_MAGIC)
        (length,) = struct.unpack("<I", raw[offset : offset + 4])
        offset += 4
        header = json.loads(raw[offset : offset + length].decode("utf-8"))
        offset += length
        dims = tuple(int(k) for k in header["dims"])
        payload = np.frombuffer(raw[offset:], dtype=header["dtype"])
        if payload.size != int(np.prod(dims)):
            raise DataError(f"{path}: expected {int(np.prod(dims))} values, found {payload.size}")
        lo1, hi1, lo2, hi2 = header["domain"]
        return cls(
            s1=np.linspace(lo1, hi1, dims[0]),
            s2=np.linspace(lo2, hi2, dims[1]),
            t=np.asarray(header["times"], dtype=float),
            values=payload.reshape(dims).astype(float),
        )


def _advection_diffusion_rate(y: np.ndarray, flow: FlowModel) -> np.ndarray:
    mode = "edge" if flow.boundary is BoundaryCondition.ZERO_FLUX else "constant"
    padded = np.pad(y, 1, mode=mode)
    dx, dy = flow.spacing
    east, west = padded[2:, 1:-1], padded[:-2, 1:-1]
    north, south = padded[1:-1, 2:], padded[1:-1, :-2]
    laplacian = (east - 2.0 * y + west) / dx**2 + (north - 2.0 * y + south) / dy**2
    # first-order upwind
    grad1 = np.where(flow.psi1 > 0, (y - west) / dx, (east - y) / dx)
    grad2 = np.where(flow.psi2 > 0, (y - south) / dy, (north - y) / dy)
    return flow.diffusion * laplacian - flow.psi1 * grad1 - flow.psi2 * grad2


def solve_pde(
    flow: FlowModel,
    initial: np.ndarray,
    t_end: float = 1.0,
    n_times: int = 100,
) -> GroundTruth:
    """
    Integrates the advection-diffusion equation with explicit Euler steps.

    Diffusion uses central differences and advection first-order upwinding.
    The step is the largest stable step times a safety factor of 0.5, shrunk
    so that the ``n_times`` equally spaced output times fall on step
    boundaries.

    Raises:
        ConfigurationError: If the initial field has the wrong shape or is negative
        StabilityError: If the solution blows up, naming the offending step
    """
    y = np.array(initial, dtype=float)
    if y.shape != flow.shape:
        raise ConfigurationError(f"Initial field has shape {y.shape}, flow grid is {flow.shape}")
    if np.any(y < 0) or not np.all(np.isfinite(y)):
        raise ConfigurationError("Initial concentrations must be finite and non-negative")
    if n_times < 2 or not t_end > 0:
        raise ConfigurationError("Need t_end > 0 and at least two output times")

    interval = t_end / (n_times - 1)
    steps_per_output = max(1, math.ceil(interval / (CFL_SAFETY * flow.max_stable_step())))
    dt = interval / steps_per_output
    limit = STABILITY_LIMIT * max(float(y.max()), 1e-300)
    logger.info(
        f"Solving PDE on {flow.shape[0]}x{flow.shape[1]} grid: dt={dt:.3e}, "
        f"{steps_per_output * (n_times - 1)} steps"
    )

    out = np.empty(flow.shape + (n_times,))
    out[:, :, 0] = y
    step = 0
    for k in range(1, n_times):
        for _ in range(steps_per_output):
            y = y + dt * _advection_diffusion_rate(y, flow)
            step += 1
            peak = np.abs(y).max()
            if not np.isfinite(peak) or peak > limit:
                raise StabilityError(f"PDE solution became unstable at step {step}", step=step)
        out[:, :, k] = y
        logger.debug(f"Reached output time {k}/{n_times - 1}", extra={"progress": True})

    return GroundTruth(s1=flow.s1, s2=flow.s2, t=np.linspace(0.0, t_end, n_times), values=out)


def gaussian_blob(
    flow: FlowModel, centre: Tuple[float, float], sd: float, peak: float = 100.0
) -> FloatArray:
    """An isotropic Gaussian concentration blob on the flow grid."""
    g1, g2 = np.meshgrid(flow.s1, flow.s2, indexing="ij")
    return peak * np.exp(-((g1 - centre[0]) ** 2 + (g2 - centre[1]) ** 2) / (2.0 * sd**2))


def default_flow_and_initial(
    seed: int = 0,
    shape: Tuple[int, int] = (100, 100),
    diffusion: float = DEFAULT_DIFFUSION,
    domain: Tuple[float, float, float, float] = DEFAULT_DOMAIN,
) -> Tuple[FlowModel, FloatArray]:
    """
    A synthetic flow field and a single Gaussian source.

    The head is a dominant west-east trend, a weak seeded north-south trend
    and a seeded Gaussian bump. The velocity ``psi = -κ grad(h)`` is scaled so
    its mean speed carries the plume across about 60% of the domain width
    over ``t in [0, 1]``.
    """
    rng = np.random.default_rng(seed)
    lo1, hi1, lo2, hi2 = domain
    width, height = hi1 - lo1, hi2 - lo2
    head = HeadSurface(
        slope1=1.0,
        slope2=float(rng.uniform(-0.15, 0.15)),
        amplitude=float(rng.uniform(0.03, 0.06)),
        centre=(
            float(lo1 + rng.uniform(0.35, 0.65) * width),
            float(lo2 + rng.uniform(0.3, 0.7) * height),
        ),
        width=0.15 * min(width, height) / 0.8,
    )
    g1, g2 = np.meshgrid(
        np.linspace(lo1, hi1, shape[0]), np.linspace(lo2, hi2, shape[1]), indexing="ij"
    )
    d1, d2 = head.gradient(g1, g2)
    kappa = 0.6 * width / float(np.mean(np.hypot(d1, d2)))
    flow = FlowModel(
        diffusion=diffusion,
        psi1=-kappa * d1,
        psi2=-kappa * d2,
        domain=domain,
        head=head,
        conductivity=kappa,
    )
    initial = gaussian_blob(flow, (lo1 + 0.2 * width, lo2 + 0.5 * height), sd=0.06 * width / 1.4)
    return flow, initial


def default_ground_truth(seed: int = 0) -> GroundTruth:
    """Solves the default flow problem on the 100 x 100 x 100 grid."""
    flow, initial = default_flow_and_initial(seed)
    return solve_pde(flow, initial)


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioSpec:
    """
    Well scenario and noise settings.

    Attributes:
        scenario_id: 1, 2 or 3
        seed: Seed for the schedule and the noise
        snr: Ratio of signal sd to noise sd on the log(y+1) scale
        within_well_correlation: Error correlation between samples of one well
    """

    scenario_id: int
    seed: int = 0
    snr: float = 10.0
    within_well_correlation: float = 0.05

    def __post_init__(self) -> None:
        if self.scenario_id not in SCENARIO_SIZES:
            raise ConfigurationError(f"Unknown scenario {self.scenario_id}; expected 1, 2 or 3")
        if not self.snr > 0:
            raise ConfigurationError(f"Signal-to-noise ratio must be positive, got {self.snr}")
        if not 0.0 <= self.within_well_correlation < 1.0:
            raise ConfigurationError(
                f"Within-well correlation must lie in [0, 1), got {self.within_well_correlation}"
            )

    @property
    def expected_size(self) -> Tuple[int, int]:
        """``(observations, wells in the layout)``; a scenario 3 draw may miss some wells."""
        return SCENARIO_SIZES[self.scenario_id]


def load_well_layout(path: Union[str, Path] = WELL_LAYOUT_PATH) -> pd.DataFrame:
    """The packaged 29-well layout with columns ``well_id, s1, s2, n_samples``."""
    return pd.read_csv(path, dtype={"well_id": str})


def _cadence(rng: np.random.Generator, n: int, t_range: Tuple[float, float]) -> FloatArray:
    lo, hi = t_range
    step = (hi - lo) / n
    times = lo + rng.uniform(0.0, step) + step * np.arange(n) + rng.normal(0.0, 0.1 * step, n)
    return np.clip(times, lo, hi)


@dataclass(frozen=True)
class WellSchedule:
    """Sampling slots of a scenario: well id, location and time per observation."""

    well_id: np.ndarray
    s1: FloatArray
    s2: FloatArray
    t: FloatArray


def _schedule_from_wells(
    rng: np.random.Generator, wells: pd.DataFrame, t_range: Tuple[float, float]
) -> WellSchedule:
    ids, s1, s2, t = [], [], [], []
    for row in wells.itertuples(index=False):
        times = _cadence(rng, int(row.n_samples), t_range)
        ids.extend([row.well_id] * times.size)
        s1.append(np.full(times.size, row.s1))
        s2.append(np.full(times.size, row.s2))
        t.append(times)
    return WellSchedule(np.asarray(ids, dtype=object), np.concatenate(s1), np.concatenate(s2), np.concatenate(t))


def scenario_schedule(
    spec: ScenarioSpec,
    domain: Tuple[float, float, float, float] = DEFAULT_DOMAIN,
    t_range: Tuple[float, float] = (0.0, 1.0),
    rng: Optional[np.random.Generator] = None,
) -> WellSchedule:
    """Well locations and sampling times of a scenario (no values)."""
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    if spec.scenario_id == 2:
        lo1, hi1, lo2, hi2 = domain
        n_wells = SCENARIO_SIZES[2][1]
        margin1, margin2 = 0.02 * (hi1 - lo1), 0.02 * (hi2 - lo2)
        counts = np.full(n_wells, 5)
        counts[rng.choice(n_wells, size=SCENARIO_SIZES[2][0] - counts.sum(), replace=False)] += 1
        wells = pd.DataFrame(
            {
                "well_id": [f"R{k + 1:03d}" for k in range(n_wells)],
                "s1": rng.uniform(lo1 + margin1, hi1 - margin1, n_wells),
                "s2": rng.uniform(lo2 + margin2, hi2 - margin2, n_wells),
                "n_samples": counts,
            }
        )
        return _schedule_from_wells(rng, wells, t_range)

    full = _schedule_from_wells(rng, load_well_layout(), t_range)
    if spec.scenario_id == 1:
        return full

    idx = np.sort(rng.choice(full.t.size, size=SCENARIO_SIZES[3][0], replace=False))
    return WellSchedule(full.well_id[idx], full.s1[idx], full.s2[idx], full.t[idx])


def scenario_noise(
    rng: np.random.Generator, well_labels: np.ndarray, sigma: float, correlation: float
) -> FloatArray:
    """
    Log-scale errors with total variance ``sigma^2`` and within-well correlation.

    Each well shares one effect of variance ``correlation * sigma^2``; every
    sample adds independent noise of variance ``(1 - correlation) * sigma^2``.
    """
    well_labels = np.asarray(well_labels)
    n_wells = int(well_labels.max()) + 1 if well_labels.size else 0
    shared = rng.normal(0.0, sigma * math.sqrt(correlation), n_wells)
    own = rng.normal(0.0, sigma * math.sqrt(1.0 - correlation), well_labels.size)
    return shared[well_labels] + own


def build_scenario(truth: GroundTruth, spec: ScenarioSpec) -> Dataset:
    """
    Samples a noisy dataset from the ground truth.

    On the log(y+1) scale the error sd is the in-sample sd of the true signal
    divided by ``spec.snr``; values are clamped at zero after back-transforming.
    """
    rng = np.random.default_rng(spec.seed)
    schedule = scenario_schedule(spec, domain=truth.domain, t_range=(truth.t[0], truth.t[-1]), rng=rng)
    points = np.column_stack([schedule.s1, schedule.s2, schedule.t])
    signal = np.log1p(truth(points))
    sigma = float(np.std(signal)) / spec.snr if np.isfinite(spec.snr) else 0.0
    _, labels = np.unique(schedule.well_id.astype(str), return_inverse=True)
    noise = scenario_noise(rng, labels, sigma, spec.within_well_correlation)
    values = np.maximum(np.expm1(signal + noise), 0.0)
    ds = Dataset.from_arrays(
        schedule.well_id, schedule.s1, schedule.s2, schedule.t, values, transform=Transform.LOG1P
    )
    logger.info(
        f"Scenario {spec.scenario_id} (seed {spec.seed}): {ds.n} observations at "
        f"{len(ds.wells)} wells, log-scale noise sd {sigma:.4f}"
    )
    return ds


# ---------------------------------------------------------------------------
# Integrated squared error
# ---------------------------------------------------------------------------


class ISEEvaluator:
    """
    Integrated squared error on the log(y+1) scale over the hull region.

    Cells of a regular grid over the hull's bounding box and time interval
    contribute when their centres lie inside the spatial hull. The true
    surface is evaluated once, so one evaluator serves many fits.
    """

    def __init__(
        self,
        truth: GroundTruth,
        hull: HullRegion,
        resolution: Tuple[int, int, int] = (50, 50, 50),
    ) -> None:
        lo = hull.vertices.min(axis=0)
        hi = hull.vertices.max(axis=0)
        t_lo, t_hi = hull.t_interval
        if not t_hi > t_lo:
            raise DomainError("The sampled time interval is empty", axis="t")
        edges = [
            np.linspace(a, b, int(k) + 1)
            for a, b, k in ((lo[0], hi[0], resolution[0]), (lo[1], hi[1], resolution[1]), (t_lo, t_hi, resolution[2]))
        ]
        self.s1, self.s2, self.t = (0.5 * (e[1:] + e[:-1]) for e in edges)
        self.cell_volume = float(np.prod([e[1] - e[0] for e in edges]))
        g1, g2 = np.meshgrid(self.s1, self.s2, indexing="ij")
        self.mask = hull.contains(g1, g2)
        if not self.mask.any():
            raise DomainError("No grid cell centre lies inside the convex hull")
        self._centres = np.column_stack([g1[self.mask], g2[self.mask]])
        self._truth = np.log1p(truth(self._points()))

    def _points(self) -> FloatArray:
        m = self._centres.shape[0]
        return np.column_stack(
            [np.tile(self._centres, (self.t.size, 1)), np.repeat(self.t, m)]
        )

    def __call__(self, fit: Union[FitResult, Callable[[np.ndarray], np.ndarray]]) -> float:
        if isinstance(fit, FitResult):
            grid = predict_grid(fit, self.s1, self.s2, self.t)
            # (n_inside, n_t) -> time-major to match _points
            estimate = grid.values[self.mask].T.ravel()
        else:
            estimate = np.asarray(fit(self._points()), dtype=float)
        return float(np.sum((estimate - self._truth) ** 2) * self.cell_volume)


def integrated_squared_error(
    fit: Union[FitResult, Callable[[np.ndarray], np.ndarray]],
    truth: GroundTruth,
    hull: HullRegion,
    resolution: Tuple[int, int, int] = (50, 50, 50),
) -> float:
    """
    Riemann-sum ISE of a fit against the truth on the log(y+1) scale.

    ``fit`` is a :class:`FitResult` or any callable mapping ``(n, 3)`` points
    to working-scale predictions.

    Raises:
        DomainError: If no grid cell lies inside the hull
    """
    return ISEEvaluator(truth, hull, resolution)(fit)


def well_squared_error(fit: FitResult, ds: Dataset, truth: GroundTruth) -> float:
    """Sum of squared errors of the fit against the truth at the sampled points."""
    points = ds.coordinates
    return float(np.sum((predict_points(fit, points) - np.log1p(truth(points))) ** 2))
