"""Run-directory artifacts: config files, manifests, content hashes.

A run directory holds everything needed to reproduce and audit a run: the
echoed config, the manifest (seed, input content hash, scaling factors,
final values, wall time), the per-epoch metrics CSV, the checkpoint, and the
SVG plots.  Two runs whose manifests carry the same content hash were fed
byte-identical inputs and therefore produce byte-identical metrics.
"""

from __future__ import annotations

import hashlib
import json
import shutil
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ConfigError", "load_config", "content_hash", "write_manifest", "prepare_run_dir"]


class ConfigError(ValueError):
    """Unknown or malformed configuration entry."""


_SCHEMA = {
    "problem": {
        "preset": str,
        "mode": str,
        "weighting": str,
        "dataset": str,
        "scaled": bool,
        "resolution": dict,
    },
    "training": {
        "epochs": int,
        "seed": int,
        "lr_theta": float,
        "lr_alpha": float,
        "lr_load": float,
        "lr_sa": float,
        "sa_all_points": bool,
    },
    "transfer": {
        "checkpoint": str,
        "freeze_layers": int,
        "inherit_task_weights": bool,
    },
    "generate": {
        "noise": (float, list),
        "monitoring": int,
        "ref_epochs": int,
        "ref_checkpoint": str,
    },
}


def _find_line(text: str, key: str) -> int | None:
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith(f"{key}") and "=" in stripped:
            name = stripped.split("=", 1)[0].strip()
            if name == key:
                return i
        if stripped.startswith(f"[{key}]") or stripped.startswith(f"[{key}."):
            return i
    return None


def load_config(path) -> dict:
    """Parse and validate a TOML run config; unknown keys are errors."""
    path = Path(path)
    text = path.read_text()
    try:
        cfg = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    for section, content in cfg.items():
        if section not in _SCHEMA:
            line = _find_line(text, section)
            raise ConfigError(
                f"{path}:{line or '?'}: unknown section [{section}] "
                f"(expected one of {sorted(_SCHEMA)})"
            )
        if not isinstance(content, dict):
            raise ConfigError(f"{path}: section [{section}] must be a table")
        for key, value in content.items():
            if key not in _SCHEMA[section]:
                line = _find_line(text, key)
                raise ConfigError(
                    f"{path}:{line or '?'}: unknown key {key!r} in [{section}] "
                    f"(expected one of {sorted(_SCHEMA[section])})"
                )
            expect = _SCHEMA[section][key]
            types = expect if isinstance(expect, tuple) else (expect,)
            if expect is float:
                types = (float, int)
            if not isinstance(value, types):
                line = _find_line(text, key)
                raise ConfigError(
                    f"{path}:{line or '?'}: key {key!r} has type "
                    f"{type(value).__name__}, expected {expect}"
                )
    if "problem" not in cfg or "preset" not in cfg["problem"]:
        raise ConfigError(f"{path}: missing required [problem] preset")
    return cfg


def content_hash(*payloads: bytes) -> str:
    digest = hashlib.sha256()
    for p in payloads:
        digest.update(hashlib.sha256(p).digest())
    return digest.hexdigest()


def prepare_run_dir(out_dir, config_path=None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if config_path is not None:
        shutil.copyfile(config_path, out / "config.toml")
    return out


def write_manifest(out_dir, manifest: dict) -> Path:
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str))
    return path
