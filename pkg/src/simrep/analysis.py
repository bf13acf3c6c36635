"""Model analyses driven by ensemble distances.

Single-parameter sweeps against a base output, nutrient-bound sweeps and
per-subsystem knockout averages for flux networks, one-at-a-time local
sensitivity with a projected-space column next to a specified-output column,
and average-linkage clustering of Monte Carlo runs with per-cluster
parameter/output distributions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contrastive import EnsembleModel
from .embedding import DistanceSummary, distance, replicate_distance
from .seeds import derive_seed
from .simulators.abm import ABMParams, abm_simulate
from .simulators.fba import FbaInfeasible, FbaUnbounded, FluxNetwork, fba_knockout, fba_solve
from .simulators.lv import LVParams, lv_simulate_batch
from .simulators.output import SimulationError, SimulationOutput
from .simulators.sampling import abm_apply_named, lv_param_names

STOCHASTIC_FAMILIES = ("abm",)


@dataclass
class SweepResult:
    family: str
    parameter: str
    values: np.ndarray
    base_value: float
    summaries: list[DistanceSummary | None]
    failures: list[tuple[float, str]] = field(default_factory=list)
    outputs: list[SimulationOutput | None] | None = None

    def mean_distances(self) -> np.ndarray:
        return np.array([s.mean if s is not None else np.nan for s in self.summaries])


def _simulate_lv_vectors(vectors: np.ndarray, base: LVParams,
                         lv_opts: dict) -> list[SimulationOutput | None]:
    """Integrate many LV parameter vectors in one batched pass."""
    batch = lv_simulate_batch(np.atleast_2d(vectors), x0=base.x0, **lv_opts)
    outs = []
    for i in range(batch.shape[0]):
        if np.all(np.isfinite(batch[i])):
            outs.append(SimulationOutput("timeseries", batch[i], params=vectors[i]))
        else:
            outs.append(None)
    return outs


def parameter_sweep(
    family: str,
    model: EnsembleModel,
    base_params: np.ndarray,
    param_index: int,
    values: np.ndarray,
    replicates: int = 1,
    seed: int = 0,
    base=None,
    lv_opts: dict | None = None,
) -> SweepResult:
    """Distance from the base output as one parameter moves over `values`.

    Deterministic families compare single outputs; the stochastic ABM
    compares replicate sets (base replicates vs per-value replicates, all
    with distinct derived seeds, so even the base point reports its
    cross-replicate spread).
    """
    base_params = np.asarray(base_params, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    base_value = base_params[param_index]
    if not np.any(np.isclose(values, base_value)):
        raise ValueError("swept values must include the base value")
    stochastic = family in STOCHASTIC_FAMILIES
    if stochastic and replicates < 2:
        raise ValueError(f"{family} is stochastic; need replicates >= 2")

    if family == "lv":
        base = base or LVParams()
        lv_opts = lv_opts or {}
        param_name = lv_param_names(base.r.shape[0])[param_index]
        vectors = np.tile(base_params, (len(values) + 1, 1))
        vectors[1:, param_index] = values
        sims = _simulate_lv_vectors(vectors, base, lv_opts)
        if sims[0] is None:
            raise SimulationError("base simulation blew up")
        base_out, value_outs = sims[0], sims[1:]

        def run(value, vi):
            if value_outs[vi] is None:
                raise SimulationError("trajectory blew up")
            return distance(model, base_out, value_outs[vi])

    elif family == "abm":
        base = base or ABMParams()
        from .simulators.abm import RATE_NAMES

        param_name = RATE_NAMES[param_index]
        base_p = abm_apply_named(base, list(RATE_NAMES), base_params)
        base_set = [abm_simulate(base_p, derive_seed(seed, 0, r)) for r in range(replicates)]

        def run(value, vi):
            vec = base_params.copy()
            vec[param_index] = value
            p = abm_apply_named(base, list(RATE_NAMES), vec)
            outs = [abm_simulate(p, derive_seed(seed, vi + 1, r)) for r in range(replicates)]
            return replicate_distance(model, base_set, outs)

    else:
        raise ValueError(f"parameter_sweep supports lv and abm, not {family!r}")

    summaries: list[DistanceSummary | None] = []
    failures = []
    for vi, value in enumerate(values):
        try:
            summaries.append(run(value, vi))
        except (SimulationError, FbaInfeasible, FbaUnbounded) as err:
            summaries.append(None)
            failures.append((float(value), str(err)))
    return SweepResult(family, param_name, values, float(base_value), summaries, failures)


def flux_bound_sweep(
    net: FluxNetwork,
    model: EnsembleModel,
    reaction: str | int,
    bound_values: np.ndarray,
) -> SweepResult:
    """Distance of the optimal flux state from the bound-0 state, per lower bound."""
    idx = net.reaction_index(reaction)
    bound_values = np.asarray(bound_values, dtype=np.float64)
    base_out = fba_solve(net.with_bounds(idx, lower=0.0))
    summaries: list[DistanceSummary | None] = []
    outputs: list[SimulationOutput | None] = []
    failures = []
    for value in bound_values:
        try:
            out = fba_solve(net.with_bounds(idx, lower=float(value)))
        except (FbaInfeasible, FbaUnbounded) as err:
            summaries.append(None)
            outputs.append(None)
            failures.append((float(value), str(err)))
            continue
        summaries.append(distance(model, base_out, out))
        outputs.append(out)
    return SweepResult("fba", net.reactions[idx], bound_values, 0.0, summaries,
                       failures, outputs)


def plateau_length(outputs: list[SimulationOutput | None]) -> int:
    """Length of the trailing run of identical flux vectors (the level-off)."""
    run = 0
    last = None
    for out in reversed(outputs):
        if out is None:
            break
        if last is None:
            last = out.data
            run = 1
        elif np.array_equal(out.data, last):
            run += 1
        else:
            break
    return run


@dataclass
class KnockoutRecord:
    reaction: str
    subsystem: str
    status: str  # ok | infeasible
    summary: DistanceSummary | None
    message: str = ""


@dataclass
class KnockoutResult:
    records: list[KnockoutRecord]
    subsystem_stats: dict[str, tuple[float, float, int]]  # mean, std, count
    excluded_subsystems: list[str]
    base: SimulationOutput

    def top_subsystem(self) -> str:
        return max(self.subsystem_stats.items(), key=lambda kv: kv[1][0])[0]


def knockout_sweep(net: FluxNetwork, model: EnsembleModel) -> KnockoutResult:
    """Knock out every reaction; average projected distances per subsystem.

    A reaction carrying zero flux in the base optimum cannot change the
    optimum when removed (the base solution stays feasible and optimal), so
    its knockout reuses the base flux vector instead of re-solving, which
    also keeps alternate-optimum ties from injecting noise. Infeasible
    knockouts are excluded from subsystem means and reported.
    """
    base = fba_solve(net)
    records = []
    for i, name in enumerate(net.reactions):
        if abs(base.data[i]) <= 1e-12:
            out = base
        else:
            try:
                out = fba_knockout(net, i)
            except (FbaInfeasible, FbaUnbounded) as err:
                records.append(KnockoutRecord(name, net.subsystems[i], "infeasible",
                                              None, str(err)))
                continue
        records.append(KnockoutRecord(name, net.subsystems[i], "ok",
                                      distance(model, base, out)))

    stats: dict[str, tuple[float, float, int]] = {}
    excluded = []
    for subsystem in dict.fromkeys(net.subsystems):  # keep first-seen order
        dists = [r.summary.mean for r in records
                 if r.subsystem == subsystem and r.status == "ok"]
        if not dists:
            excluded.append(subsystem)
            continue
        arr = np.asarray(dists)
        stats[subsystem] = (float(arr.mean()), float(arr.std()), len(arr))
    return KnockoutResult(records, stats, excluded, base)


@dataclass
class SensitivityResult:
    param_names: list[str]
    raw_projected: np.ndarray
    raw_projected_std: np.ndarray
    raw_specified: np.ndarray
    norm_projected: np.ndarray
    norm_specified: np.ndarray
    rank_projected: np.ndarray  # 1 = most sensitive
    rank_specified: np.ndarray
    degenerate: bool = False
    failures: list[tuple[str, str]] = field(default_factory=list)


def _ranks_desc(values: np.ndarray) -> np.ndarray:
    order = np.argsort(-values, kind="stable")
    ranks = np.empty(len(values), dtype=int)
    ranks[order] = np.arange(1, len(values) + 1)
    return ranks


def final_values(out: SimulationOutput) -> np.ndarray:
    """Final timepoint of a timeseries, or the raw vector itself."""
    if out.shape_tag == "timeseries":
        return out.data[-1]
    return out.data.ravel()


def local_sensitivity(
    family: str,
    model: EnsembleModel,
    base_params: np.ndarray,
    delta: float = 0.10,
    extractor=final_values,
    base=None,
    lv_opts: dict | None = None,
    replicates: int = 1,
    seed: int = 0,
) -> SensitivityResult:
    """One-at-a-time +delta perturbation of every parameter.

    Two sensitivity columns per parameter: the mean ensemble distance from
    the base output (holistic), and the mean absolute change of the
    extractor's values (specified). Both are normalized to their column
    maxima; an all-zero column (e.g. delta = 0) is flagged degenerate.
    """
    base_params = np.asarray(base_params, dtype=np.float64)
    k = len(base_params)

    if family == "lv":
        base = base or LVParams()
        lv_opts = lv_opts or {}
        names = lv_param_names(base.r.shape[0])[:k]
        vectors = np.tile(base_params, (k + 1, 1))
        for pi in range(k):
            vectors[pi + 1, pi] *= 1.0 + delta
        sims = _simulate_lv_vectors(vectors, base, lv_opts)
        if sims[0] is None:
            raise SimulationError("base simulation blew up")
        base_out, perturbed = sims[0], sims[1:]
        base_spec = extractor(base_out)

        def run(vec, pi):
            out = perturbed[pi]
            if out is None:
                raise SimulationError("trajectory blew up")
            return distance(model, base_out, out), np.abs(extractor(out) - base_spec).mean()

    elif family == "abm":
        base = base or ABMParams()
        from .simulators.abm import RATE_NAMES

        if replicates < 2:
            raise ValueError("abm is stochastic; need replicates >= 2")
        names = list(RATE_NAMES)[:k]
        base_p = abm_apply_named(base, names, base_params)
        base_set = [abm_simulate(base_p, derive_seed(seed, 0, r)) for r in range(replicates)]
        base_spec = np.mean([extractor(o) for o in base_set], axis=0)

        def run(vec, pi):
            p = abm_apply_named(base, names, vec)
            outs = [abm_simulate(p, derive_seed(seed, pi + 1, r)) for r in range(replicates)]
            spec = np.mean([extractor(o) for o in outs], axis=0)
            return replicate_distance(model, base_set, outs), np.abs(spec - base_spec).mean()

    else:
        raise ValueError(f"local_sensitivity supports lv and abm, not {family!r}")

    raw_p = np.zeros(k)
    raw_p_std = np.zeros(k)
    raw_s = np.zeros(k)
    failures = []
    for pi in range(k):
        vec = base_params.copy()
        vec[pi] = vec[pi] * (1.0 + delta)
        try:
            summary, spec_change = run(vec, pi)
        except (SimulationError, FbaInfeasible, FbaUnbounded) as err:
            failures.append((names[pi], str(err)))
            continue
        raw_p[pi], raw_p_std[pi], raw_s[pi] = summary.mean, summary.std, spec_change

    degenerate = raw_p.max() == 0.0 or raw_s.max() == 0.0
    norm_p = raw_p / raw_p.max() if raw_p.max() > 0 else np.zeros(k)
    norm_s = raw_s / raw_s.max() if raw_s.max() > 0 else np.zeros(k)
    return SensitivityResult(
        list(names), raw_p, raw_p_std, raw_s, norm_p, norm_s,
        _ranks_desc(raw_p), _ranks_desc(raw_s), degenerate, failures,
    )


@dataclass
class ClusterResult:
    merges: list[tuple[int, int, float]]  # representatives (smallest member), height
    assignments: np.ndarray  # labels 0..k-1, ordered by smallest member index
    k: int

    @property
    def heights(self) -> np.ndarray:
        return np.array([h for _, _, h in self.merges])


def agglomerative_cluster(dist: np.ndarray, k: int) -> ClusterResult:
    """Average-linkage (UPGMA) clustering of a precomputed distance matrix.

    Cluster-pair distances are maintained as exact cross-pair sums divided
    by pair counts, and ties merge the lexicographically smallest pair of
    cluster representatives (a cluster is represented by its smallest member
    index), so results are reproducible across platforms.
    """
    dist = np.asarray(dist, dtype=np.float64)
    n = dist.shape[0]
    if dist.ndim != 2 or dist.shape != (n, n):
        raise ValueError(f"distance matrix must be square, got {dist.shape}")
    if not np.allclose(dist, dist.T, atol=1e-9):
        raise ValueError("distance matrix must be symmetric")
    if np.abs(np.diag(dist)).max() > 1e-12:
        raise ValueError("distance matrix must have a zero diagonal")
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")

    sums = ((dist + dist.T) / 2.0).astype(np.float64)
    sizes = np.ones(n)
    active = np.ones(n, dtype=bool)
    avg = sums.copy()
    np.fill_diagonal(avg, np.inf)

    merges: list[tuple[int, int, float]] = []
    for _ in range(n - 1):
        # row-major argmin lands on the upper-triangle image of the smallest
        # (i, j) pair among ties, which is the documented tie-break
        flat = int(np.argmin(avg))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        height = float(avg[i, j])
        merges.append((i, j, height))

        sums[i, :] += sums[j, :]
        sums[:, i] = sums[i, :]
        sizes[i] += sizes[j]
        active[j] = False
        avg[i, active] = sums[i, active] / (sizes[i] * sizes[active])
        avg[i, ~active] = np.inf
        avg[i, i] = np.inf
        avg[:, i] = avg[i, :]
        avg[j, :] = np.inf
        avg[:, j] = np.inf

    labels = np.arange(n)
    for i, j, _ in merges[: n - k]:
        labels[labels == j] = i
    reps = sorted(set(labels.tolist()))
    relabel = {rep: c for c, rep in enumerate(reps)}
    assignments = np.array([relabel[r] for r in labels])
    return ClusterResult(merges, assignments, k)


@dataclass
class HistSummary:
    count: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    bin_edges: np.ndarray
    bin_counts: np.ndarray


@dataclass
class ClusterProfile:
    profiles: dict[int, dict[str, HistSummary]]  # cluster -> field -> summary
    empty_clusters: list[int]


def _summarize(values: np.ndarray, edges: np.ndarray) -> HistSummary:
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    counts, _ = np.histogram(values, bins=edges)
    return HistSummary(len(values), float(values.min()), float(q1), float(med),
                       float(q3), float(values.max()), edges, counts)


def characterize_clusters(
    assignments: np.ndarray,
    dataset: list[SimulationOutput],
    param_names: list[str],
    extractors: dict[str, callable] | None = None,
    n_bins: int = 10,
) -> ClusterProfile:
    """Per-cluster distributions of sampled parameters and selected outputs.

    Bin edges span the full dataset per field, so histograms are comparable
    across clusters.
    """
    assignments = np.asarray(assignments)
    if len(assignments) != len(dataset):
        raise ValueError("assignments must cover the dataset")
    extractors = extractors or {}

    params = np.stack([out.params for out in dataset])
    if params.shape[1] != len(param_names):
        raise ValueError(
            f"dataset has {params.shape[1]} parameters, got {len(param_names)} names"
        )
    columns: dict[str, np.ndarray] = {
        f"param:{nm}": params[:, i] for i, nm in enumerate(param_names)
    }
    for nm, fn in extractors.items():
        columns[f"output:{nm}"] = np.array([float(fn(out)) for out in dataset])

    edges = {
        nm: np.histogram_bin_edges(col, bins=n_bins) for nm, col in columns.items()
    }
    profiles: dict[int, dict[str, HistSummary]] = {}
    empty = []
    for c in range(int(assignments.max()) + 1):
        mask = assignments == c
        if not mask.any():
            profiles[c] = {}
            empty.append(c)
            continue
        profiles[c] = {
            nm: _summarize(col[mask], edges[nm]) for nm, col in columns.items()
        }
    return ClusterProfile(profiles, empty)
