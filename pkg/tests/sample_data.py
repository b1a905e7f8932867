"""
Small synthetic well datasets for unit tests.

The surface is smooth on the log(y+1) scale, so low-dimensional bases fit it
well and every selection method settles on an interior λ.
"""

import numpy as np

from spacetime_pspline.data_model import Dataset
from spacetime_pspline.splines import TensorBasisSpec


def true_log_surface(s1, s2, t):
    return 1.5 * np.exp(-((s1 - 0.4) ** 2 + (s2 - 0.5) ** 2) / 0.15) * (0.5 + t) + 0.3 * s2


def make_dataset(n_wells=14, per_well=10, noise=0.05, seed=0):
    """Wells at random locations in the unit square, sampled at jittered regular times."""
    rng = np.random.default_rng(seed)
    locations = rng.uniform(0.0, 1.0, size=(n_wells, 2))
    ids, s1, s2, t = [], [], [], []
    for w, (x, y) in enumerate(locations):
        times = np.clip(np.linspace(0.0, 1.0, per_well) + rng.normal(0.0, 0.02, per_well), 0.0, 1.0)
        ids.extend([f"W{w + 1:02d}"] * per_well)
        s1.append(np.full(per_well, x))
        s2.append(np.full(per_well, y))
        t.append(times)
    s1, s2, t = np.concatenate(s1), np.concatenate(s2), np.concatenate(t)
    log_values = true_log_surface(s1, s2, t) + rng.normal(0.0, noise, s1.size)
    values = np.maximum(np.expm1(log_values), 0.0)
    return Dataset.from_arrays(ids, s1, s2, t, values)


def small_spec(ds, counts=(5, 5, 4), penalty_order=1):
    return TensorBasisSpec.for_dataset(ds, counts, degree=2, penalty_order=penalty_order)
