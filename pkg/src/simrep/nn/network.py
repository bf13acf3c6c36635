"""Forward and backward passes for the three encoder families.

Pure numpy. A forward call returns the embeddings and an activation cache;
``backward`` consumes the cache and the gradient of a scalar loss with
respect to the embeddings and returns parameter gradients shaped like the
weights. Relu uses subgradient 0 at exactly zero; maxpool routes the
gradient to the first maximal element of a window (row-major order) on ties.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..seeds import rng_from
from .spec import (
    Activation,
    Conv1D,
    Conv2D,
    Dense,
    EncoderSpec,
    Flatten,
    GlobalAvgPool,
    MaxPool,
    relu_follows,
)


@dataclass
class LayerParams:
    w: np.ndarray
    b: np.ndarray


@dataclass
class EncoderWeights:
    """Trained or initialized parameters of one encoder.

    ``params[i]`` holds the (w, b) pair for spec layer i, or None for
    parameter-free layers.
    """

    spec: EncoderSpec
    params: list[LayerParams | None]
    init_seed: int

    def n_params(self) -> int:
        return sum(p.w.size + p.b.size for p in self.params if p is not None)

    def to_flat(self) -> np.ndarray:
        parts = []
        for p in self.params:
            if p is not None:
                parts.append(p.w.ravel())
                parts.append(p.b.ravel())
        return np.concatenate(parts) if parts else np.zeros(0)

    def with_flat(self, flat: np.ndarray) -> "EncoderWeights":
        """Copy of these weights with parameters taken from a flat vector."""
        out, i = [], 0
        for p in self.params:
            if p is None:
                out.append(None)
                continue
            w = flat[i : i + p.w.size].reshape(p.w.shape).astype(p.w.dtype)
            i += p.w.size
            b = flat[i : i + p.b.size].reshape(p.b.shape).astype(p.b.dtype)
            i += p.b.size
            out.append(LayerParams(w, b))
        if i != flat.size:
            raise ValueError(f"flat vector of size {flat.size}, expected {i}")
        return EncoderWeights(self.spec, out, self.init_seed)

    def astype(self, dtype) -> "EncoderWeights":
        out = [
            None if p is None else LayerParams(p.w.astype(dtype), p.b.astype(dtype))
            for p in self.params
        ]
        return EncoderWeights(self.spec, out, self.init_seed)


def init_encoder(spec: EncoderSpec, seed: int, dtype=np.float32) -> EncoderWeights:
    """He-uniform init before relu, Glorot-uniform otherwise. Pure in (spec, seed)."""
    spec.validate()
    rng = rng_from(seed)
    shapes = spec.layer_shapes()
    params: list[LayerParams | None] = []
    for i, layer in enumerate(spec.layers):
        if isinstance(layer, Dense):
            fan_in, fan_out = shapes[i][0], layer.units
            wshape = (fan_in, layer.units)
        elif isinstance(layer, Conv1D):
            fan_in = layer.kernel * shapes[i][1]
            fan_out = layer.kernel * layer.filters
            wshape = (layer.kernel, shapes[i][1], layer.filters)
        elif isinstance(layer, Conv2D):
            fan_in = layer.kernel * layer.kernel * shapes[i][2]
            fan_out = layer.kernel * layer.kernel * layer.filters
            wshape = (layer.kernel, layer.kernel, shapes[i][2], layer.filters)
        else:
            params.append(None)
            continue
        if relu_follows(spec.layers, i):
            limit = np.sqrt(6.0 / fan_in)
        else:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=wshape).astype(dtype)
        nb = wshape[-1]
        params.append(LayerParams(w, np.zeros(nb, dtype=dtype)))
    return EncoderWeights(spec, params, int(seed))


def _conv1d_windows(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    # x: (B, L, C) -> contiguous (B, L', C*K) so the contraction is one matmul
    win = sliding_window_view(x, kernel, axis=1)[:, ::stride]
    b, lp, c, k = win.shape
    return win.reshape(b, lp, c * k)


def _conv2d_windows(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    # x: (B, H, W, C) -> contiguous (B, H', W', C*K*K)
    win = sliding_window_view(x, (kernel, kernel), axis=(1, 2))[:, ::stride, ::stride]
    b, hp, wp, c, ki, kj = win.shape
    return win.reshape(b, hp, wp, c * ki * kj)


def _conv1d_wmat(w: np.ndarray) -> np.ndarray:
    # (K, C, F) -> (C*K, F), matching the window flattening order
    k, c, f = w.shape
    return np.ascontiguousarray(w.transpose(1, 0, 2)).reshape(c * k, f)


def _conv2d_wmat(w: np.ndarray) -> np.ndarray:
    # (K, K, C, F) -> (C*K*K, F)
    ki, kj, c, f = w.shape
    return np.ascontiguousarray(w.transpose(2, 0, 1, 3)).reshape(c * ki * kj, f)


def forward(weights: EncoderWeights, batch: np.ndarray):
    """Project a batch; returns (embeddings [B, output_dim], cache for backward)."""
    spec = weights.spec
    x = np.asarray(batch)
    if x.shape[1:] != spec.input_shape:
        raise ValueError(
            f"batch shape {x.shape[1:]} does not match spec input {spec.input_shape}"
        )
    if x.shape[0] < 1:
        raise ValueError("batch must hold at least one sample")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite values in input batch")
    dtype = np.float64
    for p in weights.params:
        if p is not None:
            dtype = p.w.dtype
            break
    x = x.astype(dtype, copy=False)

    cache = []
    for i, layer in enumerate(spec.layers):
        p = weights.params[i]
        if isinstance(layer, Dense):
            cache.append(("dense", x, p))
            x = x @ p.w + p.b
        elif isinstance(layer, Conv1D):
            win = _conv1d_windows(x, layer.kernel, layer.stride)
            cache.append(("conv1d", x.shape, win, p, layer))
            x = win @ _conv1d_wmat(p.w) + p.b
        elif isinstance(layer, Conv2D):
            win = _conv2d_windows(x, layer.kernel, layer.stride)
            cache.append(("conv2d", x.shape, win, p, layer))
            x = win @ _conv2d_wmat(p.w) + p.b
        elif isinstance(layer, MaxPool):
            x, mp_cache = _maxpool_forward(x, layer.window)
            cache.append(("maxpool", mp_cache))
        elif isinstance(layer, Flatten):
            cache.append(("flatten", x.shape))
            x = x.reshape(x.shape[0], -1)
        elif isinstance(layer, GlobalAvgPool):
            cache.append(("globalavgpool", x.shape))
            x = x.mean(axis=tuple(range(1, x.ndim - 1)))
        elif isinstance(layer, Activation):
            if layer.fn == "relu":
                cache.append(("relu", x))
                x = np.maximum(x, 0)
            else:
                cache.append(("linear",))
        else:
            raise ValueError(f"unknown layer {layer!r}")
    return x, cache


def _maxpool_forward(x: np.ndarray, w: int):
    if x.ndim == 3:  # (B, L, C)
        b, length, ch = x.shape
        lp = length // w
        xr = x[:, : lp * w].reshape(b, lp, w, ch)
        idx = xr.argmax(axis=2)  # first max on ties
        out = np.take_along_axis(xr, idx[:, :, None, :], axis=2)[:, :, 0, :]
        return out, ("1d", x.shape, w, idx, xr.swapaxes(2, 3))
    # (B, H, W, C): windows flattened row-major so ties pick the first element
    b, h, wd, ch = x.shape
    hp, wp = h // w, wd // w
    xr = (
        x[:, : hp * w, : wp * w]
        .reshape(b, hp, w, wp, w, ch)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(b, hp, wp, w * w, ch)
    )
    idx = xr.argmax(axis=3)
    out = np.take_along_axis(xr, idx[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    return out, ("2d", x.shape, w, idx, xr.swapaxes(3, 4))


def _maxpool_backward(grad: np.ndarray, mp_cache) -> np.ndarray:
    kind, shape, w, idx, _ = mp_cache
    if kind == "1d":
        b, length, ch = shape
        lp = length // w
        gr = np.zeros((b, lp, w, ch), dtype=grad.dtype)
        np.put_along_axis(gr, idx[:, :, None, :], grad[:, :, None, :], axis=2)
        gx = np.zeros(shape, dtype=grad.dtype)
        gx[:, : lp * w] = gr.reshape(b, lp * w, ch)
        return gx
    b, h, wd, ch = shape
    hp, wp = h // w, wd // w
    gr = np.zeros((b, hp, wp, w * w, ch), dtype=grad.dtype)
    np.put_along_axis(gr, idx[:, :, :, None, :], grad[:, :, :, None, :], axis=3)
    gx = np.zeros(shape, dtype=grad.dtype)
    gx[:, : hp * w, : wp * w] = (
        gr.reshape(b, hp, wp, w, w, ch)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(b, hp * w, wp * w, ch)
    )
    return gx


def backward(cache, grad_out: np.ndarray) -> list[LayerParams | None]:
    """Parameter gradients for the scalar loss whose embedding-gradient is grad_out.

    Returns one entry per cached layer, aligned with EncoderWeights.params.
    """
    grads: list[LayerParams | None] = [None] * len(cache)
    g = np.asarray(grad_out)
    for i in range(len(cache) - 1, -1, -1):
        entry = cache[i]
        kind = entry[0]
        if kind == "dense":
            _, x, p = entry
            if g.shape != (x.shape[0], p.w.shape[1]):
                raise ValueError(
                    f"gradient shape {g.shape} does not match layer output "
                    f"({x.shape[0]}, {p.w.shape[1]})"
                )
            grads[i] = LayerParams(x.T @ g, g.sum(axis=0))
            g = g @ p.w.T
        elif kind == "conv1d":
            _, x_shape, win, p, layer = entry
            k, c, f = p.w.shape
            gw_mat = win.reshape(-1, c * k).T @ g.reshape(-1, f)
            gw = np.ascontiguousarray(gw_mat.reshape(c, k, f).transpose(1, 0, 2))
            grads[i] = LayerParams(gw, g.sum(axis=(0, 1)))
            gx = np.zeros(x_shape, dtype=g.dtype)
            lp = g.shape[1]
            for tap in range(k):
                pos = tap + layer.stride * np.arange(lp)
                gx[:, pos, :] += g @ p.w[tap].T
            g = gx
        elif kind == "conv2d":
            _, x_shape, win, p, layer = entry
            ki_n, kj_n, c, f = p.w.shape
            gw_mat = win.reshape(-1, c * ki_n * kj_n).T @ g.reshape(-1, f)
            gw = np.ascontiguousarray(
                gw_mat.reshape(c, ki_n, kj_n, f).transpose(1, 2, 0, 3)
            )
            grads[i] = LayerParams(gw, g.sum(axis=(0, 1, 2)))
            gx = np.zeros(x_shape, dtype=g.dtype)
            hp, wp = g.shape[1], g.shape[2]
            rows = layer.stride * np.arange(hp)
            cols = layer.stride * np.arange(wp)
            for ki in range(ki_n):
                for kj in range(kj_n):
                    gx[np.ix_(np.arange(x_shape[0]), ki + rows, kj + cols)] += (
                        g @ p.w[ki, kj].T
                    )
            g = gx
        elif kind == "maxpool":
            g = _maxpool_backward(g, entry[1])
        elif kind == "flatten":
            g = g.reshape(entry[1])
        elif kind == "globalavgpool":
            shape = entry[1]
            spatial = shape[1:-1]
            n = int(np.prod(spatial))
            g = np.broadcast_to(
                g.reshape(g.shape[0], *([1] * len(spatial)), g.shape[-1]), shape
            ) / n
        elif kind == "relu":
            g = g * (entry[1] > 0)
        elif kind == "linear":
            pass
        else:
            raise ValueError(f"unknown cache entry {kind!r}")
    return grads
