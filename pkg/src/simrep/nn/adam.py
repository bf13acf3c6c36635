"""Adam with bias correction, operating on flat parameter vectors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import EncoderWeights, LayerParams


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: np.ndarray | None = field(default=None, repr=False)
    v: np.ndarray | None = field(default=None, repr=False)


def _flat_grads(weights: EncoderWeights, grads: list[LayerParams | None]) -> np.ndarray:
    parts = []
    for p, gp in zip(weights.params, grads):
        if p is None:
            if gp is not None:
                raise ValueError("gradient present for a parameter-free layer")
            continue
        if gp.w.shape != p.w.shape or gp.b.shape != p.b.shape:
            raise ValueError(
                f"gradient shapes {gp.w.shape}/{gp.b.shape} do not match "
                f"parameters {p.w.shape}/{p.b.shape}"
            )
        parts.append(gp.w.ravel())
        parts.append(gp.b.ravel())
    return np.concatenate(parts) if parts else np.zeros(0)


def adam_step(
    weights: EncoderWeights, grads: list[LayerParams | None], state: AdamState
) -> tuple[EncoderWeights, AdamState]:
    """One Adam update; returns new weights and advanced state."""
    theta = weights.to_flat().astype(np.float64)
    g = _flat_grads(weights, grads).astype(np.float64)
    if state.m is None:
        state = AdamState(state.lr, state.beta1, state.beta2, state.epsilon, 0,
                          np.zeros_like(theta), np.zeros_like(theta))
    t = state.t + 1
    m = state.beta1 * state.m + (1 - state.beta1) * g
    v = state.beta2 * state.v + (1 - state.beta2) * g * g
    mhat = m / (1 - state.beta1**t)
    vhat = v / (1 - state.beta2**t)
    theta = theta - state.lr * mhat / (np.sqrt(vhat) + state.epsilon)
    new_state = AdamState(state.lr, state.beta1, state.beta2, state.epsilon, t, m, v)
    return weights.with_flat(theta), new_state
