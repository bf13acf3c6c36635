"""Run configuration: one JSON file drives the whole pipeline.

All seeds are explicit (nothing falls back to wall-clock state), and the
file is validated before any compute starts. The canonical-JSON sha256 of
the config is stamped into manifests and model containers so artifacts can
be traced back to the exact configuration that produced them.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..contrastive import AugmentationPolicy, TrainConfig, default_policy
from ..nn import EncoderSpec
from ..simulators.abm import ABMParams, RATE_NAMES
from ..simulators.lv import DEFAULT_DT, DEFAULT_N_OUT, DEFAULT_T
from ..simulators.sampling import FAMILIES, ParamRanges, gen_default_ranges

FAMILY_TAGS = {"lv": "timeseries", "fba": "vector", "abm": "grid"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    family: str
    seed: int
    n_samples: int = 2000
    replicates: int = 1
    ranges: ParamRanges | None = None
    output_dim: int = 16
    encoder: EncoderSpec | None = None
    train: TrainConfig = field(default_factory=TrainConfig)
    augment: AugmentationPolicy | None = None
    lv_opts: dict = field(default_factory=dict)
    abm_base: ABMParams | None = None
    fba_network: str | None = None
    analysis: dict = field(default_factory=dict)
    testdata: dict = field(default_factory=lambda: {"kind": "A", "n": 2000})
    config_hash: str = ""

    def effective_ranges(self) -> ParamRanges:
        return self.ranges if self.ranges is not None else gen_default_ranges(self.family)

    def effective_policy(self) -> AugmentationPolicy:
        return self.augment if self.augment is not None else default_policy(
            FAMILY_TAGS[self.family]
        )


def _expect(obj: dict, key: str, types, where: str, default=None, required=False):
    if key not in obj:
        if required:
            raise ConfigError(f"{where}: missing required field {key!r}")
        return default
    v = obj[key]
    if not isinstance(v, types):
        raise ConfigError(f"{where}.{key}: expected {types}, got {type(v).__name__}")
    return v


def config_hash_of(obj: dict) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def parse_config(obj: dict, where: str = "config") -> RunConfig:
    family = _expect(obj, "family", str, where, required=True)
    if family not in FAMILIES:
        raise ConfigError(f"{where}.family: {family!r} is not one of {FAMILIES}")
    seed = _expect(obj, "seed", int, where, required=True)

    ranges = None
    if obj.get("ranges") is not None:
        raw = _expect(obj, "ranges", dict, where)
        try:
            ranges = ParamRanges(
                tuple((str(k), float(v[0]), float(v[1])) for k, v in raw.items())
            )
        except (TypeError, IndexError, ValueError) as err:
            raise ConfigError(f"{where}.ranges: {err}") from err

    train_raw = _expect(obj, "train", dict, where, default={})
    try:
        train = TrainConfig(
            batch_size=int(train_raw.get("batch_size", 64)),
            temperature=float(train_raw.get("temperature", 0.5)),
            epochs=int(train_raw.get("epochs", 30)),
            lr=float(train_raw.get("lr", 1e-3)),
            ensemble_size=int(train_raw.get("ensemble_size", 5)),
            member_seeds=(tuple(train_raw["member_seeds"])
                          if train_raw.get("member_seeds") else None),
        )
    except ValueError as err:
        raise ConfigError(f"{where}.train: {err}") from err

    augment = None
    if obj.get("augment") is not None:
        a = _expect(obj, "augment", dict, where)
        try:
            augment = AugmentationPolicy(
                family=a.get("family", FAMILY_TAGS[family]),
                noise_sigma=float(a.get("noise_sigma", 0.05)),
                mask_fraction=float(a.get("mask_fraction", 0.10)),
                grid_symmetry=bool(a.get("grid_symmetry", True)),
            )
        except ValueError as err:
            raise ConfigError(f"{where}.augment: {err}") from err

    encoder = None
    if obj.get("encoder") is not None:
        try:
            encoder = EncoderSpec.from_json(obj["encoder"])
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"{where}.encoder: {err}") from err

    lv_raw = _expect(obj, "lv", dict, where, default={})
    lv_opts = {
        "t_final": float(lv_raw.get("t_final", DEFAULT_T)),
        "dt": float(lv_raw.get("dt", DEFAULT_DT)),
        "n_out": int(lv_raw.get("n_out", DEFAULT_N_OUT)),
    }

    abm_base = None
    if obj.get("abm") is not None:
        a = _expect(obj, "abm", dict, where)
        try:
            abm_base = ABMParams(
                lattice=int(a.get("lattice", 50)),
                steps=int(a.get("steps", 200)),
                **{nm: float(a[nm]) for nm in RATE_NAMES if nm in a},
            )
        except ValueError as err:
            raise ConfigError(f"{where}.abm: {err}") from err

    n_samples = _expect(obj, "n_samples", int, where, default=2000)
    if n_samples < 1:
        raise ConfigError(f"{where}.n_samples: must be >= 1")
    replicates = _expect(obj, "replicates", int, where, default=1)
    if replicates < 1:
        raise ConfigError(f"{where}.replicates: must be >= 1")

    return RunConfig(
        family=family,
        seed=seed,
        n_samples=n_samples,
        replicates=replicates,
        ranges=ranges,
        output_dim=int(obj.get("output_dim", 16)),
        encoder=encoder,
        train=train,
        augment=augment,
        lv_opts=lv_opts,
        abm_base=abm_base,
        fba_network=obj.get("fba_network"),
        analysis=_expect(obj, "analysis", dict, where, default={}),
        testdata=_expect(obj, "testdata", dict, where,
                         default={"kind": "A", "n": 2000}),
        config_hash=config_hash_of(obj),
    )


def load_config(path: str | Path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            obj = json.load(f)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path} is not valid JSON: {err}") from err
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return parse_config(obj, where=str(path))
