"""Shape-tagged simulation outputs.

One SimulationOutput holds one model run: a flat vector (fluxes), a
timepoints x species matrix (ODE trajectories), or a height x width x
channels grid (lattice states). The producing parameter vector and seed ride
along as metadata so analyses can trace samples back to parameter space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SHAPE_NDIM = {"vector": 1, "timeseries": 2, "grid": 3}


class SimulationError(RuntimeError):
    """A simulation failed (blow-up, infeasibility, ...)."""


@dataclass
class SimulationOutput:
    shape_tag: str
    data: np.ndarray
    params: np.ndarray = field(default_factory=lambda: np.zeros(0))
    seed: int = 0

    def __post_init__(self):
        if self.shape_tag not in SHAPE_NDIM:
            raise ValueError(f"unknown shape tag {self.shape_tag!r}")
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != SHAPE_NDIM[self.shape_tag]:
            raise ValueError(
                f"{self.shape_tag} output must be {SHAPE_NDIM[self.shape_tag]}-d, "
                f"got shape {self.data.shape}"
            )
        if not np.all(np.isfinite(self.data)):
            raise ValueError("simulation output holds non-finite values")
        self.params = np.asarray(self.params, dtype=np.float64).ravel()

    @property
    def dims(self) -> tuple[int, ...]:
        return self.data.shape
