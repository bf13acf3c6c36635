"""Contrastive ensemble training.

Each training batch augments every input twice, projects all views, and
scores them with the temperature-scaled cross-entropy loss where the
similarity between two projections p1, p2 is 1 / (1 + euclidean(p1, p2)).
There is no projection head: the loss acts directly on the embeddings that
downstream analyses compare. Ensembles are many identically configured
encoders trained from different seeds; their spread is what the consensus
score (embedding module) measures.

Augmentations act on z-scored data, so noise_sigma is in units of one
feature standard deviation:
  * vector: additive gaussian noise + zeroing a random subset of features
  * timeseries: the same noise + zeroing one random contiguous time window
    per channel
  * grid: a random dihedral image (rotations/flips) + per-cell noise
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .nn import (
    Activation,
    AdamState,
    Conv1D,
    Conv2D,
    Dense,
    EncoderSpec,
    EncoderWeights,
    Flatten,
    GlobalAvgPool,
    MaxPool,
    adam_step,
    backward,
    forward,
    init_encoder,
)
from .seeds import derive_seed, rng_from
from .simulators.output import SimulationOutput

STD_FLOOR = 1e-8


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class AugmentationPolicy:
    family: str  # vector | timeseries | grid
    noise_sigma: float = 0.05
    mask_fraction: float = 0.10
    grid_symmetry: bool = True

    def __post_init__(self):
        if self.family not in ("vector", "timeseries", "grid"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if not 0 <= self.mask_fraction <= 0.5:
            raise ValueError("mask_fraction must be in [0, 0.5]")


def default_policy(family: str) -> AugmentationPolicy:
    if family == "grid":
        return AugmentationPolicy("grid", noise_sigma=0.05, mask_fraction=0.0)
    return AugmentationPolicy(family, noise_sigma=0.05, mask_fraction=0.10)


@dataclass
class TrainConfig:
    batch_size: int = 64
    temperature: float = 0.5
    epochs: int = 30
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    ensemble_size: int = 5
    member_seeds: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")
        if self.member_seeds is not None:
            seeds = tuple(int(s) for s in self.member_seeds)
            if len(seeds) != self.ensemble_size:
                raise ValueError("member_seeds must match ensemble_size")
            if len(set(seeds)) != len(seeds):
                raise ValueError("member seeds must be distinct")
            self.member_seeds = seeds

    def seeds(self, base_seed: int) -> tuple[int, ...]:
        if self.member_seeds is not None:
            return self.member_seeds
        return tuple(derive_seed(base_seed, k) for k in range(self.ensemble_size))


@dataclass
class EnsembleModel:
    spec: EncoderSpec
    members: list[EncoderWeights]
    norm_mean: np.ndarray
    norm_std: np.ndarray
    loss_curves: list[np.ndarray] = field(default_factory=list)
    member_seeds: tuple[int, ...] = ()

    @property
    def size(self) -> int:
        return len(self.members)

    def normalize(self, out: SimulationOutput | np.ndarray) -> np.ndarray:
        data = out.data if isinstance(out, SimulationOutput) else np.asarray(out)
        if data.shape != self.norm_mean.shape:
            raise ValueError(
                f"output shape {data.shape} does not match model input "
                f"{self.norm_mean.shape}"
            )
        return (data - self.norm_mean) / self.norm_std


def normalize_fit(dataset: list[SimulationOutput]) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature mean and std over a dataset; std floored at 1e-8."""
    if len(dataset) < 2:
        raise ValueError("need at least 2 samples to fit normalization")
    shape = dataset[0].data.shape
    for i, out in enumerate(dataset):
        if out.data.shape != shape:
            raise ValueError(f"sample {i} has shape {out.data.shape}, expected {shape}")
    stacked = np.stack([out.data for out in dataset])
    mean = stacked.mean(axis=0)
    std = np.maximum(stacked.std(axis=0), STD_FLOOR)
    return mean, std


def _dihedral(grid: np.ndarray, element: int) -> np.ndarray:
    """One of the 8 symmetries of the square, acting on (H, W, C)."""
    rot, flip = element % 4, element >= 4
    g = np.rot90(grid, k=rot, axes=(0, 1))
    if flip:
        g = np.flip(g, axis=0)
    return np.ascontiguousarray(g)


def augment(out: SimulationOutput, policy: AugmentationPolicy, seed: int) -> SimulationOutput:
    """Identity-preserving perturbation; same shape, pure in (out, policy, seed)."""
    if policy.family != out.shape_tag:
        raise ValueError(
            f"policy family {policy.family!r} does not match output tag {out.shape_tag!r}"
        )
    rng = rng_from(seed)
    data = out.data.copy()

    if policy.family == "vector":
        n = data.shape[0]
        n_mask = int(round(policy.mask_fraction * n))
        if n_mask > 0:
            data[rng.choice(n, size=n_mask, replace=False)] = 0.0
    elif policy.family == "timeseries":
        t, channels = data.shape
        width = int(round(policy.mask_fraction * t))
        if width > 0:
            for c in range(channels):
                start = int(rng.integers(0, t - width + 1))
                data[start : start + width, c] = 0.0
    else:  # grid
        if policy.grid_symmetry:
            data = _dihedral(data, int(rng.integers(0, 8)))
        n_mask = int(round(policy.mask_fraction * data.size))
        if n_mask > 0:
            flat = data.reshape(-1)
            flat[rng.choice(flat.size, size=n_mask, replace=False)] = 0.0

    if policy.noise_sigma > 0:
        data = data + rng.normal(0.0, policy.noise_sigma, size=data.shape)
    return SimulationOutput(out.shape_tag, data, out.params, out.seed)


def euclid_similarity(p1: np.ndarray, p2: np.ndarray) -> float:
    """similarity = 1 / (1 + euclidean distance); 1 iff the points coincide."""
    p1, p2 = np.asarray(p1), np.asarray(p2)
    if p1.shape != p2.shape:
        raise ValueError(f"dimension mismatch: {p1.shape} vs {p2.shape}")
    return 1.0 / (1.0 + float(np.linalg.norm(p1 - p2)))


def _similarity_matrix(emb: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sq = (emb * emb).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (emb @ emb.T)
    d = np.sqrt(np.maximum(d2, 0.0))
    np.fill_diagonal(d, 0.0)
    return 1.0 / (1.0 + d), d


def ntxent_euclidean(embeddings: np.ndarray, temperature: float) -> float:
    """Mean contrastive loss over all 2B anchors.

    Rows 2k and 2k+1 are the two views of input k. Each anchor's positive is
    its partner view; all other rows are negatives.
    """
    loss, _ = _ntxent_impl(np.asarray(embeddings, dtype=np.float64), temperature, False)
    return loss


def ntxent_euclidean_grad(embeddings: np.ndarray, temperature: float):
    """(loss, gradient wrt embeddings). Subgradient 0 where distinct rows coincide."""
    emb = np.asarray(embeddings, dtype=np.float64)
    return _ntxent_impl(emb, temperature, True)


def _ntxent_impl(emb: np.ndarray, tau: float, want_grad: bool):
    if emb.ndim != 2 or emb.shape[0] % 2 != 0 or emb.shape[0] < 2:
        raise ValueError(f"embeddings must be (2B, D) with B >= 1, got {emb.shape}")
    if tau <= 0:
        raise ValueError("temperature must be > 0")
    n = emb.shape[0]
    sim, dist = _similarity_matrix(emb)
    pair = np.arange(n) ^ 1  # partner of row i

    logits = sim / tau
    np.fill_diagonal(logits, -np.inf)
    m = logits.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(logits - m).sum(axis=1))
    losses = lse - logits[np.arange(n), pair]
    loss = float(losses.mean())
    if not want_grad:
        return loss, None

    # dL/d sim[i,k] for k != i, combining anchor i's softmax with its positive
    softmax = np.exp(logits - lse[:, None])
    np.fill_diagonal(softmax, 0.0)
    coeff = softmax.copy()
    coeff[np.arange(n), pair] -= 1.0
    coeff /= n * tau
    coeff = coeff + coeff.T  # sim is symmetric in (i, k)

    # chain through sim = 1/(1+d): d sim/dd = -sim^2; unit vectors (e_i-e_k)/d
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(dist > 0, -coeff * sim * sim / dist, 0.0)
    grad = emb * factor.sum(axis=1)[:, None] - factor @ emb
    return loss, grad


def train_member(
    dataset: list[SimulationOutput] | list[np.ndarray],
    spec: EncoderSpec,
    config: TrainConfig,
    policy: AugmentationPolicy,
    seed: int,
) -> tuple[EncoderWeights, np.ndarray]:
    """Train one encoder on a pre-normalized dataset.

    Returns the final weights and the per-epoch mean loss. Pure in all
    arguments; a non-finite loss aborts with the offending step named.
    """
    n = len(dataset)
    weights = init_encoder(spec, seed)
    state = AdamState(lr=config.lr, beta1=config.beta1, beta2=config.beta2,
                      epsilon=config.epsilon)
    samples = [
        d if isinstance(d, SimulationOutput) else SimulationOutput(policy.family, d)
        for d in dataset
    ]

    curve = np.zeros(config.epochs)
    for epoch in range(config.epochs):
        order = rng_from(derive_seed(seed, 1, epoch)).permutation(n)
        losses = []
        for step in range(math.ceil(n / config.batch_size)):
            idx = order[step * config.batch_size : (step + 1) * config.batch_size]
            views = []
            for j, i in enumerate(idx):
                for v in (0, 1):
                    aug = augment(
                        samples[i], policy, derive_seed(seed, 2, epoch, step, j, v)
                    )
                    views.append(aug.data)
            batch = np.stack(views).astype(np.float32)
            # overflow from a diverging member is caught by the loss check
            with np.errstate(over="ignore", invalid="ignore"):
                emb, cache = forward(weights, batch)
                loss, grad_emb = ntxent_euclidean_grad(emb, config.temperature)
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, step {step} (seed {seed})"
                )
            grads = backward(cache, grad_emb.astype(np.float32))
            weights, state = adam_step(weights, grads, state)
            losses.append(loss)
        curve[epoch] = float(np.mean(losses)) if losses else 0.0
    return weights, curve


def train_ensemble(
    dataset: list[SimulationOutput],
    spec: EncoderSpec,
    config: TrainConfig,
    policy: AugmentationPolicy,
    base_seed: int = 0,
) -> EnsembleModel:
    """Fit normalization, then train ensemble members independently."""
    mean, std = normalize_fit(dataset)
    normalized = [
        SimulationOutput(out.shape_tag, (out.data - mean) / std, out.params, out.seed)
        for out in dataset
    ]
    seeds = config.seeds(base_seed)
    members, curves = [], []
    for k, member_seed in enumerate(seeds):
        try:
            weights, curve = train_member(normalized, spec, config, policy, member_seed)
        except TrainingDiverged as err:
            raise TrainingDiverged(f"member {k}: {err}") from err
        members.append(weights)
        curves.append(curve)
    return EnsembleModel(spec, members, mean, std, curves, seeds)


def default_spec(family: str, input_shape: tuple[int, ...], output_dim: int = 16) -> EncoderSpec:
    """Smallest stacks that respect each output format."""
    relu = Activation("relu")
    if family == "vector":
        layers = (Dense(256), relu, Dense(64), relu, Dense(output_dim))
    elif family == "timeseries":
        layers = (
            Conv1D(32, kernel=7), relu,
            Conv1D(32, kernel=5), relu,
            GlobalAvgPool(),
            Dense(64), relu,
            Dense(output_dim),
        )
    elif family == "grid":
        layers = (
            Conv2D(16, kernel=5), relu,
            MaxPool(2),
            Conv2D(32, kernel=3), relu,
            MaxPool(2),
            Flatten(),
            Dense(64), relu,
            Dense(output_dim),
        )
    else:
        raise ValueError(f"unknown family {family!r}")
    return EncoderSpec(input_shape=tuple(input_shape), layers=layers, output_dim=output_dim)
