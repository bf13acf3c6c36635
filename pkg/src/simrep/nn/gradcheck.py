"""Finite-difference verification of backward passes.

Central differences at 64-bit precision against the analytic gradients of a
scalar probe loss (a fixed random linear functional of the embeddings).
Inputs are redrawn until every relu preactivation and every maxpool
window gap clears a margin, so the loss is smooth across the +-eps stencil.
"""

from __future__ import annotations

import numpy as np

from ..seeds import derive_seed, rng_from
from .network import EncoderWeights, backward, forward, init_encoder
from .spec import EncoderSpec

KINK_MARGIN = 1e-3
MAX_PARAMS = 5000


def _margins_ok(cache, margin: float) -> bool:
    for entry in cache:
        if entry[0] == "relu":
            if np.abs(entry[1]).min() < margin:
                return False
        elif entry[0] == "maxpool":
            windows = entry[1][4]  # (..., window values)
            if windows.shape[-1] < 2:
                continue
            top2 = np.partition(windows, -2, axis=-1)[..., -2:]
            # a window whose max is an exact 0.0 is all relu-clamped entries;
            # those are locally constant, so the tie cannot move the argmax
            clear = (top2[..., 1] - top2[..., 0] >= margin) | (top2[..., 1] == 0.0)
            if not clear.all():
                return False
    return True


def _draw_smooth_batch(weights: EncoderWeights, seed: int, batch_size: int):
    spec = weights.spec
    for attempt in range(200):
        rng = rng_from(derive_seed(seed, 101, attempt))
        batch = rng.normal(size=(batch_size, *spec.input_shape))
        emb, cache = forward(weights, batch)
        if _margins_ok(cache, KINK_MARGIN):
            return batch, emb, cache
    raise RuntimeError("could not draw an input batch away from relu/maxpool kinks")


def grad_check(spec: EncoderSpec, seed: int, eps: float = 1e-4, batch_size: int = 2) -> float:
    """Max relative error between analytic and central-difference gradients."""
    weights = init_encoder(spec, seed, dtype=np.float64)
    n = weights.n_params()
    if n > MAX_PARAMS:
        raise ValueError(f"spec has {n} parameters, finite differencing caps at {MAX_PARAMS}")

    batch, emb, cache = _draw_smooth_batch(weights, seed, batch_size)
    probe = rng_from(derive_seed(seed, 202)).normal(size=emb.shape)

    # backward leaves None for parameter-free layers, matching the weights layout
    analytic_flat = EncoderWeights(spec, backward(cache, probe), seed).to_flat()

    theta = weights.to_flat()
    numeric = np.zeros_like(theta)
    for i in range(theta.size):
        for sign, slot in ((+1, 0), (-1, 1)):
            t = theta.copy()
            t[i] += sign * eps
            e, _ = forward(weights.with_flat(t), batch)
            if slot == 0:
                plus = float((e * probe).sum())
            else:
                minus = float((e * probe).sum())
        numeric[i] = (plus - minus) / (2 * eps)

    scale = np.maximum(np.abs(analytic_flat), np.abs(numeric))
    rel = np.where(scale < 1e-6, 0.0, np.abs(analytic_flat - numeric) / np.maximum(scale, 1e-300))
    return float(rel.max())


def standard_check_specs() -> dict[str, EncoderSpec]:
    """Small representatives of the three encoder families, for `simrep gradcheck`."""
    from .spec import Activation, Conv1D, Conv2D, Dense, Flatten, GlobalAvgPool, MaxPool

    relu = Activation("relu")
    return {
        "dense": EncoderSpec(
            input_shape=(9,),
            layers=(Dense(12), relu, Dense(8), relu, Dense(4)),
            output_dim=4,
        ),
        "conv1d": EncoderSpec(
            input_shape=(20, 3),
            layers=(
                Conv1D(4, kernel=5, stride=2), relu,
                Conv1D(3, kernel=3), relu,
                GlobalAvgPool(), Dense(4),
            ),
            output_dim=4,
        ),
        "conv2d": EncoderSpec(
            input_shape=(10, 10, 2),
            layers=(
                Conv2D(3, kernel=3), relu,
                MaxPool(2),
                Conv2D(4, kernel=2), relu,
                Flatten(), Dense(4),
            ),
            output_dim=4,
        ),
    }
