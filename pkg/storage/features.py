"""
storage/features.py: feature files and dataset manifests

Manifest (key=value, parsed with python-dotenv):
    visual_file=train_visual.bin
    audio_file=train_audio.bin
    label_file=train_labels.csv
    c=10
    d_visual=1024
    d_audio=128
    split=train
    normalize=none            # or zscore (train statistics only)

Feature files are either CSV (one row per sample) or AVFB binary:
    "AVFB" | version u16 | m u64 | d u64 | m·d little-endian float64
Relative paths in a manifest resolve against the manifest's directory.
"""

from __future__ import annotations
import struct
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from dotenv import dotenv_values

from models.data import FeatureMatrix, LabelVector, PairedDataset
from utils.errors import DataValidationError, FormatError, PairingError
from utils.log import get_logger

log = get_logger("features")

MAGIC = b"AVFB"
VERSION = 1
_HEADER = struct.Struct("<4sHQQ")

REQUIRED_KEYS = ("visual_file", "audio_file", "label_file", "c", "d_visual", "d_audio", "split")


# ─── Feature matrices ─────────────────────────────────────────────────────────

def write_features_bin(path: Path, values: np.ndarray) -> None:
    values = np.ascontiguousarray(values, dtype="<f8")
    m, d = values.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, m, d))
        fh.write(values.tobytes(order="C"))


def read_features_bin(path: Path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: file shorter than the AVFB header")
    magic, version, m, d = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported AVFB version {version}")
    payload = blob[_HEADER.size:]
    if len(payload) != m * d * 8:
        raise FormatError(f"{path}: payload holds {len(payload)} bytes, header promises {m}×{d} floats")
    return np.frombuffer(payload, dtype="<f8").reshape(m, d).astype(np.float64)


def write_features_csv(path: Path, values: np.ndarray) -> None:
    np.savetxt(path, np.atleast_2d(values), delimiter=",", fmt="%.17g", newline="\n")


def read_features_csv(path: Path) -> np.ndarray:
    rows: list[list[float]] = []
    width: Optional[int] = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError:
                raise DataValidationError(f"{path}: row {len(rows)} (line {lineno + 1}) is not numeric") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataValidationError(f"{path}: row {len(rows)} has {len(row)} values, expected {width}")
            rows.append(row)
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), width or 0)


def read_features(path: Path) -> np.ndarray:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
    return read_features_bin(path) if head == MAGIC else read_features_csv(path)


def write_features(path: Path, values: np.ndarray, fmt: Literal["bin", "csv"]) -> None:
    (write_features_bin if fmt == "bin" else write_features_csv)(Path(path), values)


# ─── Labels ───────────────────────────────────────────────────────────────────

def write_labels(path: Path, ids: np.ndarray) -> None:
    Path(path).write_text("".join(f"{int(y)}\n" for y in ids), encoding="utf-8")


def read_labels(path: Path) -> np.ndarray:
    ids: list[int] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        line = line.strip()
        if not line:
            continue
        try:
            ids.append(int(line))
        except ValueError:
            raise DataValidationError(f"{path}: row {len(ids)} (line {lineno + 1}) is not an integer label") from None
    return np.asarray(ids, dtype=np.int64)


# ─── Validation ───────────────────────────────────────────────────────────────

def _check_finite(path: Path, values: np.ndarray) -> None:
    bad = np.flatnonzero(~np.isfinite(values).all(axis=1))
    if bad.size:
        raise DataValidationError(f"{path}: non-finite value in row {int(bad[0])}")


def _check_dim(path: Path, values: np.ndarray, expected: int, modality: str) -> None:
    if values.shape[1] != expected:
        raise DataValidationError(
            f"{path}: {modality} rows have {values.shape[1]} values, manifest declares {expected}"
        )


def _check_labels(path: Path, ids: np.ndarray, classes: int) -> None:
    bad = np.flatnonzero((ids < 0) | (ids >= classes))
    if bad.size:
        row = int(bad[0])
        raise DataValidationError(f"{path}: label {int(ids[row])} in row {row} outside [0, {classes})")


# ─── Manifests ────────────────────────────────────────────────────────────────

def read_manifest(path: Path) -> dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise DataValidationError(f"manifest does not exist: {path}")
    values = {k: v for k, v in dotenv_values(path).items() if v is not None}
    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise DataValidationError(f"{path}: manifest lacks keys {missing}")
    return values


def load_dataset(manifest_path: Path) -> PairedDataset:
    manifest_path = Path(manifest_path)
    man  = read_manifest(manifest_path)
    base = manifest_path.parent

    try:
        classes, d_visual, d_audio = int(man["c"]), int(man["d_visual"]), int(man["d_audio"])
    except ValueError:
        raise DataValidationError(f"{manifest_path}: c, d_visual and d_audio must be integers") from None
    if man["split"] not in ("train", "test"):
        raise DataValidationError(f"{manifest_path}: split must be train or test, got '{man['split']}'")

    paths = {key: base / man[key] for key in ("visual_file", "audio_file", "label_file")}
    for key, p in paths.items():
        if not p.exists():
            raise DataValidationError(f"{manifest_path}: {key} {p} does not exist")

    visual = read_features(paths["visual_file"])
    audio  = read_features(paths["audio_file"])
    labels = read_labels(paths["label_file"])

    _check_finite(paths["visual_file"], visual)
    _check_finite(paths["audio_file"], audio)
    if not (audio.shape[0] == visual.shape[0] == labels.shape[0]):
        raise PairingError(
            f"{manifest_path}: row counts differ: audio {paths['audio_file']} has {audio.shape[0]}, "
            f"visual {paths['visual_file']} has {visual.shape[0]}, labels {paths['label_file']} has {labels.shape[0]}"
        )
    _check_dim(paths["visual_file"], visual, d_visual, "visual")
    _check_dim(paths["audio_file"], audio, d_audio, "audio")
    _check_labels(paths["label_file"], labels, classes)

    ds = PairedDataset(
        audio=FeatureMatrix(modality="audio", values=audio, source=str(paths["audio_file"])),
        visual=FeatureMatrix(modality="visual", values=visual, source=str(paths["visual_file"])),
        labels=LabelVector(ids=labels, classes=classes),
        split=man["split"],
    )
    log.info(f"✓ Loaded {ds.split} split: m={ds.m} d_visual={d_visual} d_audio={d_audio} c={classes}")
    return ds


def manifest_flag(manifest_path: Path, key: str, default: str = "") -> str:
    return read_manifest(manifest_path).get(key, default)


def write_dataset(
    ds: PairedDataset,
    directory: Path,
    fmt: Literal["bin", "csv"] = "bin",
    normalize: str = "none",
) -> Path:
    """Write features, labels and a manifest named `<split>.manifest`; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ext = "bin" if fmt == "bin" else "csv"
    names = {
        "visual_file": f"{ds.split}_visual.{ext}",
        "audio_file":  f"{ds.split}_audio.{ext}",
        "label_file":  f"{ds.split}_labels.csv",
    }
    write_features(directory / names["visual_file"], ds.visual.values, fmt)
    write_features(directory / names["audio_file"], ds.audio.values, fmt)
    write_labels(directory / names["label_file"], ds.labels.ids)

    manifest = {
        **names,
        "c": str(ds.classes),
        "d_visual": str(ds.visual.d),
        "d_audio": str(ds.audio.d),
        "split": ds.split,
        "normalize": normalize,
    }
    path = directory / f"{ds.split}.manifest"
    path.write_text("".join(f"{k}={v}\n" for k, v in manifest.items()), encoding="utf-8")
    return path
