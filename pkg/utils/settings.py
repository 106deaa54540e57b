"""
utils/settings.py: run configuration resolution

Precedence: command-line flags > config file (key=value, python-dotenv syntax) > defaults.
Every flag has a config-file key of the same name (dashes become underscores).
The data-generation flags map to the synth_* keys (--per-class → synth_per_class), --out to
output_dir, --k and --ridge to cca_k and cca_ridge.
Derived values (filled only when unset):
    pretrain_epochs      epochs // 5
    classes/d_visual/d_audio   from the train (else test) manifest, else from SyntheticSpec
    synth_seed           seed
"""

from __future__ import annotations
from pathlib import Path
from typing import Any, Mapping, Optional

from dotenv import dotenv_values
from pydantic import ValidationError

from models.config import RunConfig
from storage.features import read_manifest
from utils.errors import ConfigError

# flat key → (section in RunConfig, field); section None means a top-level field
FLAT_KEYS: dict[str, tuple[Optional[str], str]] = {
    "output_dir":       (None, "output_dir"),
    "train_manifest":   (None, "train_manifest"),
    "test_manifest":    (None, "test_manifest"),
    "checkpoint":       (None, "checkpoint"),
    "cca_k":            (None, "cca_k"),
    "cca_ridge":        (None, "cca_ridge"),
    "sensitivity":      (None, "sensitivity"),
    "seed":             ("train", "seed"),
    "epochs":           ("train", "epochs"),
    "pretrain_epochs":  ("train", "pretrain_epochs"),
    "batch_size":       ("train", "batch_size"),
    "center_alpha":     ("train", "center_alpha"),
    "grad_clip":        ("train", "grad_clip"),
    "checkpoint_every": ("train", "checkpoint_every"),
    "progress":         ("train", "progress"),
    "lambda1":          ("weights", "lambda1"),
    "lambda2":          ("weights", "lambda2"),
    "lambda3":          ("weights", "lambda3"),
    "lambda4":          ("weights", "lambda4"),
    "discr_weight":     ("weights", "discr"),
    "base_lr":          ("schedule", "base_lr"),
    "peak_lr":          ("schedule", "peak_lr"),
    "warmup_epochs":    ("schedule", "warmup_epochs"),
    "decay1_epoch":     ("schedule", "decay1_epoch"),
    "decay1_lr":        ("schedule", "decay1_lr"),
    "decay2_epoch":     ("schedule", "decay2_epoch"),
    "decay2_lr":        ("schedule", "decay2_lr"),
    "d_visual":         ("model", "d_visual"),
    "d_audio":          ("model", "d_audio"),
    "hidden":           ("model", "hidden"),
    "latent":           ("model", "latent"),
    "classes":          ("model", "classes"),
    "activation":       ("model", "activation"),
    "synth_classes":         ("synthetic", "classes"),
    "synth_per_class":       ("synthetic", "per_class"),
    "synth_prototype_dim":   ("synthetic", "prototype_dim"),
    "synth_d_visual":        ("synthetic", "d_visual"),
    "synth_d_audio":         ("synthetic", "d_audio"),
    "synth_prototype_scale": ("synthetic", "prototype_scale"),
    "synth_jitter":          ("synthetic", "jitter"),
    "synth_noise":           ("synthetic", "noise"),
    "synth_modality_gap":    ("synthetic", "modality_gap"),
    "synth_test_fraction":   ("synthetic", "test_fraction"),
    "synth_seed":            ("synthetic", "seed"),
    "synth_format":          ("synthetic", "file_format"),
    "synth_normalize":       ("synthetic", "normalize"),
}

_OPTIONAL = {"train_manifest", "test_manifest", "checkpoint", "cca_k", "cca_ridge", "grad_clip"}


def load_config_file(path: Optional[str | Path]) -> dict[str, str]:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file does not exist: {path}")
    values = {k: ("" if v is None else v) for k, v in dotenv_values(path).items()}
    unknown = sorted(set(values) - set(FLAT_KEYS))
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    return values


def _nest(flat: Mapping[str, Any]) -> dict[str, Any]:
    nested: dict[str, Any] = {"train": {"weights": {}, "schedule": {}}, "model": {}, "synthetic": {}}
    for key, value in flat.items():
        if key not in FLAT_KEYS:
            raise ConfigError(f"unknown config key '{key}'")
        if key in _OPTIONAL and value in ("", None):
            value = None
        section, name = FLAT_KEYS[key]
        if section is None:
            nested[name] = value
        elif section in ("weights", "schedule"):
            nested["train"][section][name] = value
        else:
            nested[section][name] = value
    return nested


# A flag that sets a source key invalidates file values derived from it, unless the flag sets them too.
_DERIVED_FROM: dict[str, tuple[str, ...]] = {
    "epochs": ("pretrain_epochs",),
    "seed": ("synth_seed",),
    "train_manifest": ("classes", "d_visual", "d_audio"),
    "test_manifest": ("classes", "d_visual", "d_audio"),
    "synth_classes": ("classes",),
    "synth_d_visual": ("d_visual",),
    "synth_d_audio": ("d_audio",),
}


def resolve_run_config(
    file_values: Mapping[str, Any],
    overrides: Mapping[str, Any],
) -> RunConfig:
    """Merge defaults, file values and flag overrides (None overrides are ignored), then fill derived values."""
    flags = {k: v for k, v in overrides.items() if v is not None}
    merged: dict[str, Any] = dict(file_values)
    for source, derived in _DERIVED_FROM.items():
        if source in flags:
            for key in derived:
                if key not in flags:
                    merged.pop(key, None)
    merged.update(flags)

    if "pretrain_epochs" not in merged and "epochs" in merged:
        try:
            merged["pretrain_epochs"] = int(merged["epochs"]) // 5
        except ValueError:
            raise ConfigError(f"epochs must be an integer, got '{merged['epochs']}'") from None
    if "synth_seed" not in merged and "seed" in merged:
        merged["synth_seed"] = merged["seed"]

    manifest = merged.get("train_manifest") or merged.get("test_manifest")
    if manifest:
        man = read_manifest(Path(manifest))
        merged.setdefault("classes", man["c"])
        merged.setdefault("d_visual", man["d_visual"])
        merged.setdefault("d_audio", man["d_audio"])
    else:
        merged.setdefault("classes", merged.get("synth_classes", 5))
        merged.setdefault("d_visual", merged.get("synth_d_visual", 64))
        merged.setdefault("d_audio", merged.get("synth_d_audio", 32))

    try:
        return RunConfig.model_validate(_nest(merged))
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from None


def flatten(run: RunConfig) -> dict[str, str]:
    dumped = run.model_dump()
    flat: dict[str, str] = {}
    for key, (section, name) in FLAT_KEYS.items():
        if section is None:
            value = dumped[name]
        elif section in ("weights", "schedule"):
            value = dumped["train"][section][name]
        else:
            value = dumped[section][name]
        flat[key] = "" if value is None else str(value)
    return flat


def write_resolved(run: RunConfig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    flat = flatten(run)
    path.write_text("".join(f"{k}={flat[k]}\n" for k in sorted(flat)), encoding="utf-8")
    return path
