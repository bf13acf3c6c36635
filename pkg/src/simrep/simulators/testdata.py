"""Synthetic 2-d datasets lifted to 9 dimensions.

Low-dimensional point clouds with known structure (gaussian blobs, or two
concentric rings) are mapped through a fixed polynomial transform; a trained
ensemble should recover the original 2-d layout from the 9-d data, which is
checked by comparing neighborhoods between learned projections and the
original points.
"""

from __future__ import annotations

import numpy as np

from ..seeds import derive_seed, rng_from
from .output import SimulationOutput

BLOB_CENTERS = np.array([[0.0, -2.0], [2.5, 2.0], [-2.5, 2.0]])
BLOB_SIGMA = 0.45
RING_RADII = (1.0, 2.0)
RING_SIGMA = 0.08


def lift_2d(points: np.ndarray) -> np.ndarray:
    """(x, y) -> (x+y, x-y, xy, x^2, y^2, x^2 y, x y^2, x^3, y^3)."""
    points = np.asarray(points, dtype=np.float64)
    x, y = points[..., 0], points[..., 1]
    return np.stack(
        [x + y, x - y, x * y, x * x, y * y, x * x * y, x * y * y, x**3, y**3],
        axis=-1,
    )


def gen_testdata(kind: str, n: int, seed: int) -> tuple[np.ndarray, list[SimulationOutput]]:
    """Generate dataset A (three blobs) or B (two rings) and its 9-d lift.

    Returns the original (n, 2) points and the lifted vectors, with each
    sample's original coordinates kept as its parameter vector.
    """
    if kind not in ("A", "B"):
        raise ValueError(f"kind must be 'A' or 'B', got {kind!r}")
    if n < 10:
        raise ValueError("need n >= 10")
    rng = rng_from(derive_seed(seed, 7))
    if kind == "A":
        labels = np.arange(n) % len(BLOB_CENTERS)
        points = BLOB_CENTERS[labels] + rng.normal(0.0, BLOB_SIGMA, size=(n, 2))
    else:
        radii = np.where(np.arange(n) % 2 == 0, RING_RADII[0], RING_RADII[1])
        radii = radii + rng.normal(0.0, RING_SIGMA, size=n)
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
        points = np.stack([radii * np.cos(theta), radii * np.sin(theta)], axis=1)
    lifted = lift_2d(points)
    outputs = [
        SimulationOutput("vector", lifted[i], params=points[i], seed=derive_seed(seed, 7, i))
        for i in range(n)
    ]
    return points, outputs
