"""Binary containers for datasets and trained models.

Layout: 7-byte magic "SIMREP1", a 4-byte little-endian header length, a
UTF-8 JSON header, then a payload of little-endian 32-bit floats. Dataset
payloads are the samples concatenated row-major followed by the parameter
matrix; model payloads are the concatenated flat parameter vectors of the
ensemble members. Headers carry everything needed to reinterpret the
payload (and, for models, the normalization statistics at full precision,
so reloaded models project bit-identically).

Writes are atomic (write to a temp name, then rename).
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..contrastive import EnsembleModel
from ..nn import EncoderSpec, init_encoder
from ..simulators.output import SimulationOutput

MAGIC = b"SIMREP1"
SCHEMA_VERSION = 1


class ContainerError(ValueError):
    """Base class for malformed container files."""


class BadMagic(ContainerError):
    pass


class VersionMismatch(ContainerError):
    pass


class Truncated(ContainerError):
    pass


def _write_atomic(path: str | Path, header: dict, payload: bytes) -> None:
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(payload)
    os.replace(tmp, path)


def _read_container(path: str | Path) -> tuple[dict, bytes]:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"{path}: not a SIMREP container (bad magic)")
    off = len(MAGIC)
    if len(raw) < off + 4:
        raise Truncated(f"{path}: truncated before header length")
    (hlen,) = struct.unpack("<I", raw[off : off + 4])
    off += 4
    if len(raw) < off + hlen:
        raise Truncated(f"{path}: truncated inside header")
    try:
        header = json.loads(raw[off : off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise ContainerError(f"{path}: unreadable header ({err})") from err
    if header.get("schema") != SCHEMA_VERSION:
        raise VersionMismatch(
            f"{path}: schema {header.get('schema')!r}, this build reads {SCHEMA_VERSION}"
        )
    return header, raw[off + hlen :]


@dataclass
class DatasetContainer:
    shape_tag: str
    dims: tuple[int, ...]
    data: np.ndarray  # (count, *dims) float32
    params: np.ndarray  # (count, param_count) float32
    param_names: list[str]
    seeds: list[int]

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @classmethod
    def from_outputs(cls, outputs: list[SimulationOutput],
                     param_names: list[str]) -> "DatasetContainer":
        if not outputs:
            raise ValueError("cannot build a container from zero samples")
        tag, dims = outputs[0].shape_tag, outputs[0].dims
        for i, out in enumerate(outputs):
            if out.shape_tag != tag or out.dims != dims:
                raise ValueError(f"sample {i} has tag/dims {out.shape_tag}/{out.dims}, "
                                 f"expected {tag}/{dims}")
        data = np.stack([out.data for out in outputs]).astype("<f4")
        params = np.stack([out.params for out in outputs]).astype("<f4")
        if params.shape[1] != len(param_names):
            raise ValueError(
                f"samples carry {params.shape[1]} parameters, got "
                f"{len(param_names)} names"
            )
        return cls(tag, dims, data, params, list(param_names),
                   [out.seed for out in outputs])

    def outputs(self) -> list[SimulationOutput]:
        return [
            SimulationOutput(self.shape_tag, self.data[i].astype(np.float64),
                             params=self.params[i].astype(np.float64),
                             seed=self.seeds[i])
            for i in range(self.count)
        ]

    def save(self, path: str | Path) -> None:
        header = {
            "schema": SCHEMA_VERSION,
            "kind": "dataset",
            "shape_tag": self.shape_tag,
            "dims": list(self.dims),
            "count": self.count,
            "param_names": self.param_names,
            "seeds": [int(s) for s in self.seeds],
        }
        payload = self.data.astype("<f4").tobytes() + self.params.astype("<f4").tobytes()
        _write_atomic(path, header, payload)

    @classmethod
    def load(cls, path: str | Path) -> "DatasetContainer":
        header, payload = _read_container(path)
        if header.get("kind") != "dataset":
            raise ContainerError(f"{path}: kind {header.get('kind')!r}, expected dataset")
        dims = tuple(int(d) for d in header["dims"])
        count = int(header["count"])
        names = list(header["param_names"])
        sample_floats = count * int(np.prod(dims))
        param_floats = count * len(names)
        expected = 4 * (sample_floats + param_floats)
        if len(payload) != expected:
            raise Truncated(
                f"{path}: payload holds {len(payload)} bytes, header implies {expected}"
            )
        flat = np.frombuffer(payload, dtype="<f4")
        data = flat[:sample_floats].reshape(count, *dims).copy()
        params = flat[sample_floats:].reshape(count, len(names)).copy()
        return cls(header["shape_tag"], dims, data, params, names,
                   [int(s) for s in header["seeds"]])


def save_model(model: EnsembleModel, path: str | Path, config_hash: str = "") -> None:
    header = {
        "schema": SCHEMA_VERSION,
        "kind": "model",
        "spec": model.spec.to_json(),
        "norm_mean": model.norm_mean.ravel().tolist(),
        "norm_std": model.norm_std.ravel().tolist(),
        "members": model.size,
        "member_seeds": [int(s) for s in model.member_seeds],
        "config_hash": config_hash,
        "loss_curves": [np.asarray(c).tolist() for c in model.loss_curves],
    }
    payload = b"".join(w.to_flat().astype("<f4").tobytes() for w in model.members)
    _write_atomic(path, header, payload)


def load_model(path: str | Path) -> EnsembleModel:
    header, payload = _read_container(path)
    if header.get("kind") != "model":
        raise ContainerError(f"{path}: kind {header.get('kind')!r}, expected model")
    spec = EncoderSpec.from_json(header["spec"])
    template = init_encoder(spec, seed=0)
    per_member = template.n_params()
    members_n = int(header["members"])
    expected = 4 * per_member * members_n
    if len(payload) != expected:
        raise Truncated(
            f"{path}: payload holds {len(payload)} bytes, header implies {expected}"
        )
    flat = np.frombuffer(payload, dtype="<f4")
    seeds = [int(s) for s in header["member_seeds"]]
    members = []
    for k in range(members_n):
        w = template.with_flat(flat[k * per_member : (k + 1) * per_member])
        w.init_seed = seeds[k] if k < len(seeds) else 0
        members.append(w)
    shape = spec.input_shape
    mean = np.array(header["norm_mean"], dtype=np.float64).reshape(shape)
    std = np.array(header["norm_std"], dtype=np.float64).reshape(shape)
    curves = [np.array(c) for c in header.get("loss_curves", [])]
    return EnsembleModel(spec, members, mean, std, curves, tuple(seeds))
