"""Toy on-lattice tumor-immune agent-based model.

Three cell types on an L x L lattice: cancer, T cells, macrophages. One cell
per site. The rule set, fixed here, keeps the couplings of the full model it
stands in for: T cells kill adjacent cancer, macrophages blunt that killing,
and immune recruitment scales with tumor burden.

Per step, in this order, scanning cells in a seeded random order:
  1. death:         each cancer cell dies w.p. cancer_death
  2. kill:          each T cell with adjacent cancer kills one uniformly
                    chosen adjacent cancer cell w.p. tcell_kill, reduced by
                    the factor (1 - macrophage_suppression) if any
                    macrophage is adjacent
  3. proliferation: each cancer cell divides into a uniformly chosen empty
                    neighbor w.p. cancer_proliferation (skipped if boxed in)
  4. recruitment:   one T cell appears at a random empty boundary site w.p.
                    tcell_recruitment * cancer_count / L^2, then likewise
                    one macrophage with macrophage_recruitment

Adjacency is the von Neumann 4-neighborhood. Cells created during a step do
not act until the next step. The initial state is a centered disc of cancer
cells of radius max(1, round(L/10)); for L = 3, that is the single center
site. The output is the final layout as an L x L x 3 one-hot array with
channels (cancer, tcell, macrophage).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..seeds import derive_seed, rng_from
from .output import SimulationOutput

EMPTY, CANCER, TCELL, MACROPHAGE = 0, 1, 2, 3
RATE_NAMES = (
    "cancer_proliferation",
    "cancer_death",
    "tcell_recruitment",
    "tcell_kill",
    "macrophage_recruitment",
    "macrophage_suppression",
)


@dataclass
class ABMParams:
    lattice: int = 50
    steps: int = 200
    cancer_proliferation: float = 0.3
    cancer_death: float = 0.05
    tcell_recruitment: float = 0.5
    tcell_kill: float = 0.3
    macrophage_recruitment: float = 0.3
    macrophage_suppression: float = 0.7

    def __post_init__(self):
        if self.lattice < 2:
            raise ValueError("lattice side must be >= 2")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        for name in RATE_NAMES:
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability in [0, 1], got {v}")

    def rates_vector(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in RATE_NAMES])

    def with_rates(self, vec: np.ndarray) -> "ABMParams":
        vals = dict(zip(RATE_NAMES, (float(v) for v in vec)))
        return ABMParams(self.lattice, self.steps, **vals)


def initial_grid(lattice: int) -> np.ndarray:
    """Centered cancer disc of radius max(1, round(L/10))."""
    grid = np.zeros((lattice, lattice), dtype=np.int8)
    c = lattice // 2
    radius = max(1, round(lattice / 10))
    for i in range(lattice):
        for j in range(lattice):
            if (i - c) ** 2 + (j - c) ** 2 < radius**2:
                grid[i, j] = CANCER
    return grid


def _neighbors(i: int, j: int, lattice: int):
    if i > 0:
        yield i - 1, j
    if i < lattice - 1:
        yield i + 1, j
    if j > 0:
        yield i, j - 1
    if j < lattice - 1:
        yield i, j + 1


def _coords_of(grid: np.ndarray, kind: int) -> list[tuple[int, int]]:
    ii, jj = np.nonzero(grid == kind)
    return list(zip(ii.tolist(), jj.tolist()))


def _boundary_empty(grid: np.ndarray) -> list[tuple[int, int]]:
    lattice = grid.shape[0]
    sites = []
    for j in range(lattice):
        sites.append((0, j))
        sites.append((lattice - 1, j))
    for i in range(1, lattice - 1):
        sites.append((i, 0))
        sites.append((i, lattice - 1))
    return [(i, j) for i, j in sites if grid[i, j] == EMPTY]


def step_grid(grid: np.ndarray, p: ABMParams, rng: np.random.Generator) -> np.ndarray:
    """Advance one step under the fixed rule order. Mutates and returns grid."""
    lattice = grid.shape[0]

    def scan(coords):
        coords = list(coords)
        order = rng.permutation(len(coords))
        return [coords[k] for k in order]

    for i, j in scan(_coords_of(grid, CANCER)):
        if rng.random() < p.cancer_death:
            grid[i, j] = EMPTY

    for i, j in scan(_coords_of(grid, TCELL)):
        targets = [(a, b) for a, b in _neighbors(i, j, lattice) if grid[a, b] == CANCER]
        if not targets:
            continue
        suppressed = any(
            grid[a, b] == MACROPHAGE for a, b in _neighbors(i, j, lattice)
        )
        p_kill = p.tcell_kill * (1.0 - p.macrophage_suppression) if suppressed else p.tcell_kill
        if rng.random() < p_kill:
            victim = targets[int(rng.integers(0, len(targets)))]
            grid[victim] = EMPTY

    for i, j in scan(_coords_of(grid, CANCER)):
        empties = [(a, b) for a, b in _neighbors(i, j, lattice) if grid[a, b] == EMPTY]
        if empties and rng.random() < p.cancer_proliferation:
            site = empties[int(rng.integers(0, len(empties)))]
            grid[site] = CANCER

    cancer_count = int((grid == CANCER).sum())
    burden = cancer_count / (lattice * lattice)
    for kind, rate in ((TCELL, p.tcell_recruitment), (MACROPHAGE, p.macrophage_recruitment)):
        if rng.random() < rate * burden:
            empties = _boundary_empty(grid)
            if empties:
                site = empties[int(rng.integers(0, len(empties)))]
                grid[site] = kind
    return grid


def abm_simulate(p: ABMParams, seed: int) -> SimulationOutput:
    """Run the ABM and return the final layout as an L x L x 3 one-hot grid."""
    grid = initial_grid(p.lattice)
    rng = rng_from(derive_seed(seed, 3))
    for _ in range(p.steps):
        step_grid(grid, p, rng)
    layout = np.stack(
        [(grid == CANCER), (grid == TCELL), (grid == MACROPHAGE)], axis=-1
    ).astype(np.float64)
    return SimulationOutput("grid", layout, params=p.rates_vector(), seed=seed)
