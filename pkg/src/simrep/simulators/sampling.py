"""Uniform Monte Carlo generation of training datasets.

Parameters are sampled uniformly per coordinate over explicit ranges; every
simulation is one training sample (stochastic models contribute one sample
per replicate). Sample i draws from the stream hash(seed, i), so datasets
are reproducible and samples could be simulated concurrently. Failures are
recorded and excluded rather than aborting the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..seeds import derive_seed, rng_from
from .abm import ABMParams, RATE_NAMES, abm_simulate
from .fba import FbaInfeasible, FbaUnbounded, FluxNetwork, fba_solve, load_toy_network
from .lv import LVParams, lv_simulate_batch
from .output import SimulationError, SimulationOutput

FAMILIES = ("lv", "fba", "abm")


@dataclass(frozen=True)
class ParamRanges:
    """Ordered (low, high) intervals keyed by parameter name."""

    intervals: tuple[tuple[str, float, float], ...]

    def __post_init__(self):
        seen = set()
        for name, low, high in self.intervals:
            if name in seen:
                raise ValueError(f"duplicate parameter {name!r}")
            seen.add(name)
            if low > high:
                raise ValueError(f"{name}: low {low} > high {high}")

    @classmethod
    def from_dict(cls, d: dict[str, tuple[float, float]]) -> "ParamRanges":
        return cls(tuple((k, float(lo), float(hi)) for k, (lo, hi) in d.items()))

    @property
    def names(self) -> list[str]:
        return [name for name, _, _ in self.intervals]

    @property
    def lows(self) -> np.ndarray:
        return np.array([lo for _, lo, _ in self.intervals])

    @property
    def highs(self) -> np.ndarray:
        return np.array([hi for _, _, hi in self.intervals])

    def __len__(self) -> int:
        return len(self.intervals)


@dataclass
class MonteCarloResult:
    outputs: list[SimulationOutput]
    failures: list[tuple[int, str]] = field(default_factory=list)
    param_names: list[str] = field(default_factory=list)


def sample_params(ranges: ParamRanges, n: int, seed: int) -> np.ndarray:
    """(n, k) uniform draws; row i comes from the stream hash(seed, i)."""
    if n < 1:
        raise ValueError("need n >= 1 samples")
    lows, highs = ranges.lows, ranges.highs
    out = np.empty((n, len(ranges)))
    for i in range(n):
        out[i] = rng_from(derive_seed(seed, i)).uniform(lows, highs)
    return out


# LV parameter naming: r1..r4 then a11..a44 (row-major), matching LVParams.to_vector
def lv_param_names(k: int = 4) -> list[str]:
    return [f"r{i + 1}" for i in range(k)] + [
        f"a{i + 1}{j + 1}" for i in range(k) for j in range(k)
    ]


def lv_default_ranges(base: LVParams | None = None, lo: float = 0.5, hi: float = 1.5) -> ParamRanges:
    base = base or LVParams()
    vec = base.to_vector()
    names = lv_param_names(base.r.shape[0])
    return ParamRanges(tuple((nm, lo * v, hi * v) for nm, v in zip(names, vec)))


def fba_default_ranges() -> ParamRanges:
    # capping the dominant routes (R_HW, R_CH, R_GW, EX_P) forces samples onto
    # every alternative pathway, so no reaction is dead across the training set
    # and knockout reroutes land in trained territory
    return ParamRanges.from_dict({
        "EX_A:lb": (-10.0, 0.0),
        "EX_X:lb": (-5.0, 0.0),
        "R_CF:ub": (0.0, 8.0),
        "R_AH:ub": (0.0, 6.0),
        "R_HW:ub": (0.0, 12.0),
        "R_CH:ub": (0.0, 8.0),
        "R_GW:ub": (0.0, 2.0),
        "EX_P:ub": (0.0, 8.0),
    })


def abm_default_ranges() -> ParamRanges:
    return ParamRanges.from_dict({name: (0.0, 1.0) for name in RATE_NAMES})


def gen_default_ranges(family: str) -> ParamRanges:
    if family == "lv":
        return lv_default_ranges()
    if family == "fba":
        return fba_default_ranges()
    if family == "abm":
        return abm_default_ranges()
    raise ValueError(f"unknown family {family!r}")


def lv_vector_from_named(base: LVParams, names: list[str], values: np.ndarray) -> np.ndarray:
    vec = base.to_vector()
    index = {nm: i for i, nm in enumerate(lv_param_names(base.r.shape[0]))}
    for nm, v in zip(names, values):
        if nm not in index:
            raise KeyError(f"unknown LV parameter {nm!r}")
        vec[index[nm]] = v
    return vec


def fba_apply_named(net: FluxNetwork, names: list[str], values: np.ndarray) -> FluxNetwork:
    for nm, v in zip(names, values):
        rxn, _, side = nm.partition(":")
        if side == "lb":
            net = net.with_bounds(rxn, lower=float(v))
        elif side == "ub":
            net = net.with_bounds(rxn, upper=float(v))
        else:
            raise KeyError(f"FBA parameter {nm!r} must be '<reaction>:lb' or '<reaction>:ub'")
    return net


def abm_apply_named(base: ABMParams, names: list[str], values: np.ndarray) -> ABMParams:
    updates = {}
    for nm, v in zip(names, values):
        if nm not in RATE_NAMES:
            raise KeyError(f"unknown ABM rate {nm!r}")
        updates[nm] = float(np.clip(v, 0.0, 1.0))
    kwargs = {nm: updates.get(nm, getattr(base, nm)) for nm in RATE_NAMES}
    return ABMParams(base.lattice, base.steps, **kwargs)


def monte_carlo(
    family: str,
    ranges: ParamRanges,
    n: int,
    seed: int,
    replicates: int = 1,
    base=None,
    lv_opts: dict | None = None,
) -> MonteCarloResult:
    """Sample n parameter vectors and simulate each.

    For the stochastic ABM, every parameter vector is run `replicates` times
    with seeds hash(seed, i, r) and each run is its own sample.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    samples = sample_params(ranges, n, seed)
    result = MonteCarloResult([], [], list(ranges.names))

    if family == "lv":
        base = base or LVParams()
        opts = lv_opts or {}
        vectors = np.stack([
            lv_vector_from_named(base, result.param_names, samples[i]) for i in range(n)
        ])
        batch = lv_simulate_batch(vectors, x0=base.x0, **opts)
        for i in range(n):
            if not np.all(np.isfinite(batch[i])):
                result.failures.append((i, "trajectory blew up"))
                continue
            result.outputs.append(
                SimulationOutput("timeseries", batch[i], params=samples[i],
                                 seed=derive_seed(seed, i))
            )
    elif family == "fba":
        base = base or load_toy_network()
        for i in range(n):
            try:
                net = fba_apply_named(base, result.param_names, samples[i])
                out = fba_solve(net)
            except (FbaInfeasible, FbaUnbounded, ValueError) as err:
                # crossed bounds from a sampled parameter count as failures too
                result.failures.append((i, str(err)))
                continue
            result.outputs.append(
                SimulationOutput("vector", out.data, params=samples[i],
                                 seed=derive_seed(seed, i))
            )
    else:  # abm
        base = base or ABMParams()
        for i in range(n):
            p = abm_apply_named(base, result.param_names, samples[i])
            for r in range(replicates):
                run_seed = derive_seed(seed, i, r)
                try:
                    out = abm_simulate(p, run_seed)
                except SimulationError as err:
                    result.failures.append((i, f"replicate {r}: {err}"))
                    continue
                result.outputs.append(
                    SimulationOutput("grid", out.data, params=samples[i], seed=run_seed)
                )
    return result
