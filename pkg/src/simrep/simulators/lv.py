"""Four-species competitive Lotka-Volterra dynamics.

dx_i/dt = r_i x_i (1 - sum_j A_ij x_j), integrated with classic fixed-step
4th-order Runge-Kutta and subsampled to evenly spaced output timepoints.
The default parameters are the chaotic competitive set of Vano et al.
(Nonlinearity 19, 2006, eq. 3) with the three zero interaction entries
raised to 0.01 so they can be sampled both above and below base.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .output import SimulationError, SimulationOutput

VANO_R = np.array([1.0, 0.72, 1.53, 1.27])
VANO_A = np.array([
    [1.00, 1.09, 1.52, 0.01],
    [0.01, 1.00, 0.44, 1.36],
    [2.33, 0.01, 1.00, 0.47],
    [1.21, 0.51, 0.35, 1.00],
])
VANO_X0 = np.array([0.3013, 0.4586, 0.1307, 0.3557])

DEFAULT_T = 500.0
DEFAULT_DT = 0.01
DEFAULT_N_OUT = 200


@dataclass
class LVParams:
    r: np.ndarray = field(default_factory=lambda: VANO_R.copy())
    A: np.ndarray = field(default_factory=lambda: VANO_A.copy())
    x0: np.ndarray = field(default_factory=lambda: VANO_X0.copy())

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=np.float64)
        self.A = np.asarray(self.A, dtype=np.float64)
        self.x0 = np.asarray(self.x0, dtype=np.float64)
        k = self.r.shape[0]
        if self.A.shape != (k, k) or self.x0.shape != (k,):
            raise ValueError(
                f"inconsistent shapes: r {self.r.shape}, A {self.A.shape}, x0 {self.x0.shape}"
            )
        if np.any(self.r < 0) or np.any(self.x0 < 0):
            raise ValueError("growth rates and initial abundances must be >= 0")
        if np.any(np.diag(self.A) <= 0):
            raise ValueError("self-interaction (diagonal of A) must be > 0")

    def to_vector(self) -> np.ndarray:
        """Sampled parameter order: r (4), then A row-major (16)."""
        return np.concatenate([self.r, self.A.ravel()])

    @classmethod
    def from_vector(cls, vec: np.ndarray, x0: np.ndarray | None = None) -> "LVParams":
        vec = np.asarray(vec, dtype=np.float64)
        k = int(round((np.sqrt(4 + 4 * vec.size) - 2) / 2))  # k + k^2 = size
        if k + k * k != vec.size:
            raise ValueError(f"parameter vector of size {vec.size} is not k + k^2")
        return cls(vec[:k], vec[k:].reshape(k, k), VANO_X0.copy() if x0 is None else x0)


def _rhs(x: np.ndarray, r: np.ndarray, a: np.ndarray) -> np.ndarray:
    # elementwise + reduction only, so batched rows match single-run results bitwise
    return r * x * (1.0 - (a * x[..., None, :]).sum(axis=-1))


def rk4_trajectory(p: LVParams, t_final: float, dt: float) -> np.ndarray:
    """States at every step, shape (steps + 1, species)."""
    if t_final <= 0 or dt <= 0:
        raise ValueError("t_final and dt must be > 0")
    steps = int(round(t_final / dt))
    x = p.x0.copy()
    traj = np.empty((steps + 1, x.shape[0]))
    traj[0] = x
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(steps):
            k1 = _rhs(x, p.r, p.A)
            k2 = _rhs(x + 0.5 * dt * k1, p.r, p.A)
            k3 = _rhs(x + 0.5 * dt * k2, p.r, p.A)
            k4 = _rhs(x + dt * k3, p.r, p.A)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                raise SimulationError(f"state blew up at t = {(i + 1) * dt:g}")
            traj[i + 1] = x
    return traj


def subsample_indices(n_states: int, n_out: int) -> np.ndarray:
    if not 2 <= n_out <= n_states:
        raise ValueError(f"n_out must be in [2, {n_states}], got {n_out}")
    return np.round(np.linspace(0, n_states - 1, n_out)).astype(int)


def lv_simulate(
    p: LVParams,
    t_final: float = DEFAULT_T,
    dt: float = DEFAULT_DT,
    n_out: int = DEFAULT_N_OUT,
    seed: int = 0,
) -> SimulationOutput:
    """Timeseries output (n_out x species). Deterministic; seed is metadata only."""
    traj = rk4_trajectory(p, t_final, dt)
    data = traj[subsample_indices(traj.shape[0], n_out)]
    return SimulationOutput("timeseries", data, params=p.to_vector(), seed=seed)


def lv_simulate_batch(
    vectors: np.ndarray,
    t_final: float = DEFAULT_T,
    dt: float = DEFAULT_DT,
    n_out: int = DEFAULT_N_OUT,
    x0: np.ndarray | None = None,
) -> np.ndarray:
    """Integrate many parameter vectors at once; rows match lv_simulate bitwise.

    Returns (n_runs, n_out, species); rows that blow up are filled with nan
    for the caller to report.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    n_runs = vectors.shape[0]
    k = int(round((np.sqrt(4 + 4 * vectors.shape[1]) - 2) / 2))
    r = vectors[:, :k]
    a = vectors[:, k:].reshape(n_runs, k, k)
    x = np.broadcast_to(VANO_X0 if x0 is None else x0, (n_runs, k)).copy()

    steps = int(round(t_final / dt))
    keep = set(subsample_indices(steps + 1, n_out).tolist())
    out = np.full((n_runs, n_out, k), np.nan)
    col = 0
    if 0 in keep:
        out[:, col] = x
        col += 1
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(steps):
            k1 = _rhs(x, r, a)
            k2 = _rhs(x + 0.5 * dt * k1, r, a)
            k3 = _rhs(x + 0.5 * dt * k2, r, a)
            k4 = _rhs(x + dt * k3, r, a)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if (i + 1) in keep:
                out[:, col] = x
                col += 1
    return out
