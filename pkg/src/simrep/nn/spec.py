"""Encoder architecture descriptions and static shape checking.

An :class:`EncoderSpec` is an ordered list of layer descriptors applied to a
fixed input shape. Shapes are inferred statically; an inconsistent stack
raises :class:`ShapeError` naming the offending layer before any compute
happens.

Conventions (fixed for the whole package):
  * dense inputs are row vectors, ``out = x @ W + b`` with ``W[in, out]``
  * 1-d sequences are ``(length, channels)``, 2-d grids ``(height, width,
    channels)``; convolutions are "valid" (no padding)
  * maxpool uses non-overlapping windows of size ``window`` and drops any
    remainder at the high end
  * the final layer must produce exactly ``output_dim`` values and must not
    be followed by a relu (embeddings are linear)
"""

from __future__ import annotations

from dataclasses import dataclass, field

Shape = tuple[int, ...]


class ShapeError(ValueError):
    """Raised when a layer stack is statically inconsistent."""


@dataclass(frozen=True)
class Dense:
    units: int
    kind: str = field(default="dense", init=False)


@dataclass(frozen=True)
class Conv1D:
    filters: int
    kernel: int
    stride: int = 1
    kind: str = field(default="conv1d", init=False)


@dataclass(frozen=True)
class Conv2D:
    filters: int
    kernel: int
    stride: int = 1
    kind: str = field(default="conv2d", init=False)


@dataclass(frozen=True)
class MaxPool:
    window: int
    kind: str = field(default="maxpool", init=False)


@dataclass(frozen=True)
class Flatten:
    kind: str = field(default="flatten", init=False)


@dataclass(frozen=True)
class GlobalAvgPool:
    """Mean over all spatial positions, one value per channel."""

    kind: str = field(default="globalavgpool", init=False)


@dataclass(frozen=True)
class Activation:
    fn: str  # "relu" | "linear"
    kind: str = field(default="activation", init=False)

    def __post_init__(self):
        if self.fn not in ("relu", "linear"):
            raise ValueError(f"unknown activation {self.fn!r}")


Layer = Dense | Conv1D | Conv2D | MaxPool | Flatten | GlobalAvgPool | Activation


def _out_shape(layer: Layer, shape: Shape, index: int) -> Shape:
    def fail(msg: str):
        raise ShapeError(f"layer {index} ({layer.kind}): {msg} (input shape {shape})")

    if isinstance(layer, Dense):
        if len(shape) != 1:
            fail("dense expects a flat input")
        if layer.units < 1:
            fail("units must be positive")
        return (layer.units,)
    if isinstance(layer, Conv1D):
        if len(shape) != 2:
            fail("conv1d expects (length, channels)")
        length, _ = shape
        if layer.kernel > length:
            fail(f"kernel {layer.kernel} exceeds length {length}")
        if layer.stride < 1 or layer.filters < 1:
            fail("stride and filters must be positive")
        return ((length - layer.kernel) // layer.stride + 1, layer.filters)
    if isinstance(layer, Conv2D):
        if len(shape) != 3:
            fail("conv2d expects (height, width, channels)")
        h, w, _ = shape
        if layer.kernel > h or layer.kernel > w:
            fail(f"kernel {layer.kernel} exceeds spatial dims {h}x{w}")
        if layer.stride < 1 or layer.filters < 1:
            fail("stride and filters must be positive")
        return (
            (h - layer.kernel) // layer.stride + 1,
            (w - layer.kernel) // layer.stride + 1,
            layer.filters,
        )
    if isinstance(layer, MaxPool):
        if len(shape) == 2:
            length, ch = shape
            if length // layer.window < 1:
                fail(f"window {layer.window} exceeds length {length}")
            return (length // layer.window, ch)
        if len(shape) == 3:
            h, w, ch = shape
            if h // layer.window < 1 or w // layer.window < 1:
                fail(f"window {layer.window} exceeds spatial dims {h}x{w}")
            return (h // layer.window, w // layer.window, ch)
        fail("maxpool expects a spatial input")
    if isinstance(layer, Flatten):
        n = 1
        for d in shape:
            n *= d
        return (n,)
    if isinstance(layer, GlobalAvgPool):
        if len(shape) < 2:
            fail("globalavgpool expects a spatial input")
        return (shape[-1],)
    if isinstance(layer, Activation):
        return shape
    raise ShapeError(f"layer {index}: unknown layer {layer!r}")


@dataclass(frozen=True)
class EncoderSpec:
    """Architecture of one projection network."""

    input_shape: Shape
    layers: tuple[Layer, ...]
    output_dim: int = 16

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        self.validate()

    def validate(self) -> None:
        if any(d < 1 for d in self.input_shape):
            raise ShapeError(f"input shape {self.input_shape} has non-positive dims")
        shape = self.input_shape
        for i, layer in enumerate(self.layers):
            shape = _out_shape(layer, shape, i)
        if shape != (self.output_dim,):
            raise ShapeError(
                f"stack produces shape {shape}, expected ({self.output_dim},)"
            )
        # Embeddings must come off a linear final layer.
        for layer in reversed(self.layers):
            if isinstance(layer, Activation):
                if layer.fn == "relu":
                    raise ShapeError("final layer must have a linear activation")
                continue
            break

    def layer_shapes(self) -> list[Shape]:
        """Input shape of every layer plus the final output shape."""
        shapes = [self.input_shape]
        for i, layer in enumerate(self.layers):
            shapes.append(_out_shape(layer, shapes[-1], i))
        return shapes

    def to_json(self) -> dict:
        out = []
        for layer in self.layers:
            d = {"kind": layer.kind}
            for k, v in vars(layer).items():
                if k != "kind":
                    d[k] = v
            out.append(d)
        return {
            "input_shape": list(self.input_shape),
            "layers": out,
            "output_dim": self.output_dim,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EncoderSpec":
        kinds = {
            "dense": Dense,
            "conv1d": Conv1D,
            "conv2d": Conv2D,
            "maxpool": MaxPool,
            "flatten": Flatten,
            "globalavgpool": GlobalAvgPool,
            "activation": Activation,
        }
        layers = []
        for d in obj["layers"]:
            d = dict(d)
            kind = d.pop("kind")
            if kind not in kinds:
                raise ShapeError(f"unknown layer kind {kind!r}")
            layers.append(kinds[kind](**d))
        return cls(
            input_shape=tuple(obj["input_shape"]),
            layers=tuple(layers),
            output_dim=int(obj["output_dim"]),
        )


def relu_follows(layers: tuple[Layer, ...], index: int) -> bool:
    """True if a relu comes after ``index`` before the next parametric layer.

    Decides He vs Glorot initialization for the layer at ``index``.
    """
    for layer in layers[index + 1 :]:
        if isinstance(layer, Activation):
            if layer.fn == "relu":
                return True
        if isinstance(layer, (Dense, Conv1D, Conv2D)):
            return False
    return False
