"""
core/dataset.py: labels, batching, synthetic paired data, z-scoring

Synthetic generator: each class j owns a prototype h_j and, per modality, a mixing
matrix that blends a class component shared by both modalities with a
modality-specific one (`modality_gap` sets the blend). A sample draws
h' = h_j + jitter·δ and emits  audio = A_j·h' + noise,  visual = V_j·h' + noise.
"""

from __future__ import annotations

import numpy as np

from models.config import SyntheticSpec
from models.data import FeatureMatrix, LabelVector, PairedDataset
from utils.errors import DataValidationError


def one_hot(label: int, classes: int) -> np.ndarray:
    if classes < 1 or not 0 <= label < classes:
        raise DataValidationError(f"label {label} outside [0, {classes})")
    row = np.zeros(classes)
    row[label] = 1.0
    return row


def one_hot_matrix(labels: np.ndarray, classes: int) -> np.ndarray:
    return np.vstack([one_hot(int(y), classes) for y in labels]) if len(labels) else np.zeros((0, classes))


def make_batches(m: int, batch_size: int, seed: int, epoch: int) -> list[np.ndarray]:
    """Permutation of range(m), a pure function of (seed, epoch), cut into batches; last batch may be short."""
    if not 1 <= batch_size <= m:
        raise DataValidationError(f"batch size {batch_size} must lie in [1, {m}]")
    perm = np.random.default_rng([seed, epoch]).permutation(m)
    return [perm[i:i + batch_size] for i in range(0, m, batch_size)]


def gen_synthetic(spec: SyntheticSpec) -> tuple[PairedDataset, PairedDataset]:
    rng = np.random.default_rng(spec.seed)
    L, c = spec.prototype_dim, spec.classes
    d_max = max(spec.d_audio, spec.d_visual)
    shared_w = np.sqrt(1.0 - spec.modality_gap)
    own_w    = np.sqrt(spec.modality_gap)

    prototypes = rng.normal(scale=spec.prototype_scale, size=(c, L))
    mixing: dict[str, list[np.ndarray]] = {"audio": [], "visual": []}
    for _ in range(c):
        shared = rng.normal(size=(d_max, L)) / np.sqrt(L)
        for modality, d in (("audio", spec.d_audio), ("visual", spec.d_visual)):
            own = rng.normal(size=(d, L)) / np.sqrt(L)
            mixing[modality].append(shared_w * shared[:d] + own_w * own)

    audio_rows, visual_rows, labels = [], [], []
    for j in range(c):
        for _ in range(spec.per_class):
            h = prototypes[j] + spec.jitter * rng.normal(size=L)
            audio_rows.append(mixing["audio"][j] @ h + spec.noise * rng.normal(size=spec.d_audio))
            visual_rows.append(mixing["visual"][j] @ h + spec.noise * rng.normal(size=spec.d_visual))
            labels.append(j)

    audio, visual, y = np.asarray(audio_rows), np.asarray(visual_rows), np.asarray(labels)

    # stratified split: the first ceil(test_fraction·per_class) samples of each class go to test
    n_test = int(np.ceil(spec.test_fraction * spec.per_class)) if spec.test_fraction > 0 else 0
    n_test = min(n_test, spec.per_class - 1)
    test_mask = np.zeros(len(y), dtype=bool)
    for j in range(c):
        start = j * spec.per_class
        test_mask[start:start + n_test] = True

    def _split(mask: np.ndarray, split: str) -> PairedDataset:
        return PairedDataset(
            audio=FeatureMatrix(modality="audio", values=audio[mask], source="synthetic"),
            visual=FeatureMatrix(modality="visual", values=visual[mask], source="synthetic"),
            labels=LabelVector(ids=y[mask], classes=c),
            split=split,
        )

    return _split(~test_mask, "train"), _split(test_mask, "test")


def cross_modal_cosine_margin(ds: PairedDataset) -> tuple[float, float]:
    """Mean raw-space cosine of (audio_i, visual_k) for same-class vs cross-class pairs; needs d_audio == d_visual."""
    a, v = ds.audio.values, ds.visual.values
    if a.shape[1] != v.shape[1]:
        raise DataValidationError("raw cross-modal cosine needs equal audio and visual widths")
    an = a / np.maximum(np.linalg.norm(a, axis=1, keepdims=True), 1e-300)
    vn = v / np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1e-300)
    cos = an @ vn.T
    same = ds.labels.ids[:, None] == ds.labels.ids[None, :]
    return float(cos[same].mean()), float(cos[~same].mean())


# ─── Normalisation ────────────────────────────────────────────────────────────

def zscore_stats(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = values.mean(axis=0, keepdims=True)
    std  = values.std(axis=0, keepdims=True)
    return mean, np.where(std > 0.0, std, 1.0)


def apply_zscore(ds: PairedDataset, stats: dict[str, np.ndarray]) -> PairedDataset:
    def _norm(fm: FeatureMatrix) -> FeatureMatrix:
        mean, std = stats[f"norm.{fm.modality}.mean"], stats[f"norm.{fm.modality}.std"]
        return FeatureMatrix(modality=fm.modality, values=(fm.values - mean) / std, source=fm.source)

    return PairedDataset(audio=_norm(ds.audio), visual=_norm(ds.visual), labels=ds.labels, split=ds.split)


def fit_zscore(ds: PairedDataset) -> dict[str, np.ndarray]:
    stats: dict[str, np.ndarray] = {}
    for modality in ("audio", "visual"):
        mean, std = zscore_stats(ds.features(modality))
        stats[f"norm.{modality}.mean"] = mean
        stats[f"norm.{modality}.std"]  = std
    return stats
