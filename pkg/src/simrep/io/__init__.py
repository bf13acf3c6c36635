from .containers import (
    BadMagic,
    ContainerError,
    DatasetContainer,
    Truncated,
    VersionMismatch,
    load_model,
    save_model,
)
from .report import emit_csv, sha256_file, write_manifest
from .runconfig import ConfigError, RunConfig, load_config, parse_config

__all__ = [
    "BadMagic", "ConfigError", "ContainerError", "DatasetContainer",
    "RunConfig", "Truncated", "VersionMismatch", "emit_csv", "load_config",
    "load_model", "parse_config", "save_model", "sha256_file", "write_manifest",
]
