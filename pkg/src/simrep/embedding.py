"""Siamese use of a trained ensemble.

A single projected distance carries little meaning on its own; these
operations give it meaning by aggregating over ensemble members (mean and
standard deviation of member distances), over replicate sets of stochastic
runs, and over neighborhood structure (the consensus score: the average
fraction of n nearest neighbors two members agree on).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contrastive import EnsembleModel
from .nn import forward
from .simulators.output import SimulationOutput


@dataclass
class DistanceSummary:
    mean: float
    std: float
    per_member: np.ndarray
    n_pairs: int = 1

    @classmethod
    def from_members(cls, per_member: np.ndarray, n_pairs: int = 1) -> "DistanceSummary":
        per_member = np.asarray(per_member, dtype=np.float64)
        return cls(float(per_member.mean()), float(per_member.std()), per_member, n_pairs)


@dataclass
class ConsensusReport:
    n: int
    pairwise: np.ndarray  # M x M, symmetric, unit diagonal
    ensemble_score: float


def project(model: EnsembleModel, out: SimulationOutput) -> np.ndarray:
    """Embeddings of one output under every member, as an (M, D) array."""
    z = model.normalize(out)[None].astype(np.float32)
    return np.stack([forward(w, z)[0][0] for w in model.members])


def project_dataset(model: EnsembleModel, dataset: list[SimulationOutput],
                    batch: int = 256) -> np.ndarray:
    """(M, N, D) embeddings of a whole dataset."""
    zs = np.stack([model.normalize(out) for out in dataset]).astype(np.float32)
    per_member = []
    for w in model.members:
        chunks = [forward(w, zs[i : i + batch])[0] for i in range(0, len(zs), batch)]
        per_member.append(np.concatenate(chunks))
    return np.stack(per_member)


def distance(model: EnsembleModel, a: SimulationOutput, b: SimulationOutput) -> DistanceSummary:
    """Per-member euclidean distance between the two projections."""
    pa, pb = project(model, a), project(model, b)
    return DistanceSummary.from_members(np.linalg.norm(pa - pb, axis=1))


def replicate_distance(
    model: EnsembleModel,
    set_a: list[SimulationOutput],
    set_b: list[SimulationOutput],
) -> DistanceSummary:
    """Mean distance over all cross pairs of two replicate sets, per member."""
    if not set_a or not set_b:
        raise ValueError("replicate sets must be non-empty")
    pa = np.stack([project(model, o) for o in set_a])  # (Na, M, D)
    pb = np.stack([project(model, o) for o in set_b])
    diff = pa[:, None, :, :] - pb[None, :, :, :]  # (Na, Nb, M, D)
    dists = np.linalg.norm(diff, axis=3)
    return DistanceSummary.from_members(
        dists.mean(axis=(0, 1)), n_pairs=len(set_a) * len(set_b)
    )


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    sq = (points * points).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    d = np.sqrt(np.maximum(d2, 0.0))
    np.fill_diagonal(d, 0.0)
    return d


def mean_distance_matrix(projections: np.ndarray) -> np.ndarray:
    """Member-averaged pairwise distance matrix from (M, N, D) projections."""
    mats = [pairwise_distances(p) for p in projections]
    return np.mean(mats, axis=0)


def knn(points: np.ndarray, n: int) -> np.ndarray:
    """Indices of the n nearest neighbors of every point (ties: ascending index).

    A point is never its own neighbor. Brute force over the full distance
    matrix; returns an (N, n) integer array ordered nearest first.
    """
    points = np.asarray(points)
    count = points.shape[0]
    if not 1 <= n < count:
        raise ValueError(f"n must be in [1, {count - 1}], got {n}")
    d = pairwise_distances(points)
    np.fill_diagonal(d, np.inf)
    # stable sort keeps ascending-index order among exact ties
    return np.argsort(d, axis=1, kind="stable")[:, :n]


def consensus_per_point(proj_a: np.ndarray, proj_b: np.ndarray, n: int) -> np.ndarray:
    """Per-point fraction of shared n-nearest-neighbor sets under two projections."""
    proj_a, proj_b = np.asarray(proj_a), np.asarray(proj_b)
    if proj_a.shape[0] != proj_b.shape[0]:
        raise ValueError(
            f"projections cover {proj_a.shape[0]} vs {proj_b.shape[0]} points"
        )
    na, nb = knn(proj_a, n), knn(proj_b, n)
    scores = np.empty(proj_a.shape[0])
    for i in range(proj_a.shape[0]):
        scores[i] = len(np.intersect1d(na[i], nb[i], assume_unique=True)) / n
    return scores


def consensus_pair(proj_a: np.ndarray, proj_b: np.ndarray, n: int) -> float:
    """Neighborhood agreement between two projections, averaged over points."""
    return float(consensus_per_point(proj_a, proj_b, n).mean())


def consensus_ensemble(
    model: EnsembleModel,
    dataset: list[SimulationOutput],
    n_values: list[int],
    projections: np.ndarray | None = None,
) -> list[ConsensusReport]:
    """Pairwise consensus among all members, for each neighborhood size.

    Works on whatever dataset is passed (training set by default in the
    pipeline; pass held-out outputs to score generalization instead).
    """
    if model.size < 2:
        raise ValueError("consensus needs an ensemble of at least 2 members")
    if projections is None:
        projections = project_dataset(model, dataset)
    m = projections.shape[0]
    neighborhoods = {}
    reports = []
    for n in n_values:
        for k in range(m):
            neighborhoods[k] = knn(projections[k], n)
        pairwise = np.eye(m)
        for i in range(m):
            for j in range(i + 1, m):
                na, nb = neighborhoods[i], neighborhoods[j]
                per_point = [
                    len(np.intersect1d(na[p], nb[p], assume_unique=True)) / n
                    for p in range(na.shape[0])
                ]
                pairwise[i, j] = pairwise[j, i] = float(np.mean(per_point))
        iu = np.triu_indices(m, k=1)
        reports.append(ConsensusReport(n, pairwise, float(pairwise[iu].mean())))
    return reports
