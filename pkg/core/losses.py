"""
core/losses.py: training objective

    L_total = w·L_discr + λ1·L_V + λ2·L_corr + λ3·L_dist + λ4·L_center

with w = 1 except in single-loss ablation arms. Every term is a scalar Tensor, so
the total can be differentiated with `core.tensor.backward`.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from core.network import LatentCode
from core.tensor import (
    Tensor, center_cols, center_rows, constant, exp, frobenius, matmul,
    normalize_rows, softplus, sqrt, square, sum_,
)
from models.config import LossWeights
from models.state import LossReport
from utils.errors import DataValidationError, DegenerateInputError, DimensionError


@dataclass
class CorrelationDiagnostics:
    """Per-sample latent vectors with zero spread across dims (their correlations are taken as 0)."""

    degenerate_rows: int = 0

    def reset(self) -> None:
        self.degenerate_rows = 0


diagnostics = CorrelationDiagnostics()


def _same_shape(name: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{name}: shape mismatch {a.shape} vs {b.shape}")


# ─── VAE ──────────────────────────────────────────────────────────────────────

def reconstruction_loss(x_v, xhat_v, x_a, xhat_a) -> Tensor:
    """Σ over modalities of ‖X − X̂‖²_F, divided by batch size."""
    x_v, xhat_v, x_a, xhat_a = map(constant, (x_v, xhat_v, x_a, xhat_a))
    _same_shape("reconstruction (visual)", x_v, xhat_v)
    _same_shape("reconstruction (audio)", x_a, xhat_a)
    n = x_v.rows
    return (sum_(square(x_v - xhat_v)) + sum_(square(x_a - xhat_a))) * (1.0 / n)


def _kl_single(code: LatentCode) -> Tensor:
    mu, log_var = code.mu, code.log_var
    per_entry = square(mu) + exp(log_var) - 1.0 - log_var
    return sum_(per_entry) * (0.5 / mu.rows)


def kl_loss(code_v: LatentCode, code_a: LatentCode) -> Tensor:
    """Closed-form KL(N(μ, σ²) ‖ N(0, I)), batch mean, summed over modalities."""
    return _kl_single(code_v) + _kl_single(code_a)


def vae_loss(x_v, xhat_v, x_a, xhat_a, code_v: LatentCode, code_a: LatentCode) -> Tensor:
    return reconstruction_loss(x_v, xhat_v, x_a, xhat_a) + kl_loss(code_v, code_a)


# ─── Correlation ──────────────────────────────────────────────────────────────

def corr(za, zb) -> Tensor:
    """Batch-level correlation: Σ_j cov_j / √(Σ_j var_j(za) · Σ_j var_j(zb))."""
    za, zb = constant(za), constant(zb)
    _same_shape("corr", za, zb)
    if za.rows < 2:
        raise DegenerateInputError(f"corr needs a batch of at least 2, got {za.rows}")
    ca, cb = center_cols(za), center_cols(zb)
    var_a, var_b = sum_(square(ca)), sum_(square(cb))
    if var_a.item() == 0.0 or var_b.item() == 0.0:
        raise DegenerateInputError("corr input has zero variance across the batch")
    return sum_(ca * cb) / sqrt(var_a * var_b)


def pairwise_corr(za, zb) -> Tensor:
    """n_a×n_b matrix of correlations between rows, treating latent dims as observations."""
    za, zb = constant(za), constant(zb)
    if za.cols != zb.cols:
        raise DimensionError(f"pairwise_corr: {za.shape} vs {zb.shape}")
    ua, ub = normalize_rows(center_rows(za)), normalize_rows(center_rows(zb))
    for u in (ua, ub):
        diagnostics.degenerate_rows += int(np.sum(~np.any(u.data != 0.0, axis=1)))
    return matmul(ua, ub.T)


def discrimination(za, zb, labels) -> Tensor:
    """(1/n²)·Σ_ij softplus(t_ij) − s_ij·t_ij with t = ½·corr(row i of za, row j of zb), s = same class."""
    labels = np.asarray(labels)
    same = (labels[:, None] == labels[None, :]).astype(np.float64)
    t = pairwise_corr(za, zb) * 0.5
    n = same.shape[0]
    return sum_(softplus(t) - t * Tensor(same)) * (1.0 / (n * n))


def correlation_loss(z_v, z_a, labels) -> Tensor:
    """Inter-modality (a, v) plus intra-modality (v, v) and (a, a) discrimination terms."""
    z_v, z_a = constant(z_v), constant(z_a)
    _same_shape("correlation_loss", z_v, z_a)
    labels = np.asarray(labels)
    if labels.shape[0] != z_v.rows:
        raise DimensionError(f"correlation_loss: {labels.shape[0]} labels for batch of {z_v.rows}")
    return (
        discrimination(z_a, z_v, labels)
        + discrimination(z_v, z_v, labels)
        + discrimination(z_a, z_a, labels)
    )


# ─── Alignment / discrimination / centers ─────────────────────────────────────

def distance_loss(z_v, z_a) -> Tensor:
    z_v, z_a = constant(z_v), constant(z_a)
    _same_shape("distance_loss", z_v, z_a)
    return frobenius(z_v - z_a) * (1.0 / z_v.rows)


def _check_one_hot(y: np.ndarray) -> None:
    binary = np.all((y == 0.0) | (y == 1.0), axis=1)
    bad = np.flatnonzero(~binary | (y.sum(axis=1) != 1.0))
    if bad.size:
        raise DataValidationError(f"label row {int(bad[0])} is not one-hot")


def discriminative_loss(pred_a, pred_v, onehot) -> Tensor:
    pred_a, pred_v = constant(pred_a), constant(pred_v)
    y = np.asarray(onehot, dtype=np.float64)
    _check_one_hot(y)
    target = Tensor(y)
    _same_shape("discriminative_loss (audio)", pred_a, target)
    _same_shape("discriminative_loss (visual)", pred_v, target)
    n = target.rows
    return frobenius(pred_a - target) * (1.0 / n) + frobenius(pred_v - target) * (1.0 / n)


def _check_labels(labels: np.ndarray, classes: int) -> None:
    bad = np.flatnonzero((labels < 0) | (labels >= classes))
    if bad.size:
        raise DataValidationError(f"label {int(labels[bad[0]])} at batch row {int(bad[0])} outside [0, {classes})")


def center_loss(z_v, z_a, labels, centers: np.ndarray) -> Tensor:
    """½Σ‖z_v − c_y‖² + ½Σ‖z_a − c_y‖², divided by batch size; centers are constants here."""
    z_v, z_a = constant(z_v), constant(z_a)
    labels = np.asarray(labels, dtype=np.int64)
    _check_labels(labels, centers.shape[0])
    c_batch = Tensor(centers[labels])
    _same_shape("center_loss", z_v, c_batch)
    n = z_v.rows
    return (sum_(square(z_v - c_batch)) + sum_(square(z_a - c_batch))) * (0.5 / n)


def update_centers(
    centers: np.ndarray,
    z_v: np.ndarray,
    z_a: Optional[np.ndarray],
    labels,
    alpha: float,
) -> np.ndarray:
    """c_j ← c_j − α·Σ_{y_i=j}(c_j − z_i)/(1 + n_j), pooling both modalities; returns a new array."""
    labels = np.asarray(labels, dtype=np.int64)
    _check_labels(labels, centers.shape[0])
    zs, ys = [np.asarray(z_v, dtype=np.float64)], [labels]
    if z_a is not None:
        zs.append(np.asarray(z_a, dtype=np.float64))
        ys.append(labels)
    z, y = np.vstack(zs), np.concatenate(ys)

    new = centers.copy()
    for j in np.unique(y):
        members = z[y == j]
        delta   = (centers[j] - members).sum(axis=0) / (1 + members.shape[0])
        new[j]  = centers[j] - alpha * delta
    return new


# ─── Total ────────────────────────────────────────────────────────────────────

@dataclass
class LossParts:
    rec: float = 0.0
    kl: float = 0.0
    vae: float = 0.0
    corr: float = 0.0
    dist: float = 0.0
    discr: float = 0.0
    center: float = 0.0
    tensors: dict[str, Tensor] = field(default_factory=dict, repr=False)


def total_loss(parts: LossParts, weights: LossWeights) -> LossReport:
    total = (
        weights.discr * parts.discr
        + weights.lambda1 * parts.vae
        + weights.lambda2 * parts.corr
        + weights.lambda3 * parts.dist
        + weights.lambda4 * parts.center
    )
    return LossReport(
        rec=parts.rec, kl=parts.kl, vae=parts.vae, corr=parts.corr,
        dist=parts.dist, discr=parts.discr, center=parts.center, total=total,
    )


def total_tensor(parts: LossParts, weights: LossWeights) -> Tensor:
    """Differentiable weighted sum of the tensors held in `parts.tensors`."""
    coeff = {
        "discr": weights.discr, "vae": weights.lambda1, "corr": weights.lambda2,
        "dist": weights.lambda3, "center": weights.lambda4,
    }
    total: Optional[Tensor] = None
    for name, w in coeff.items():
        term = parts.tensors.get(name)
        if term is None or w == 0.0:
            continue
        total = term * w if total is None else total + term * w
    return total if total is not None else Tensor(0.0)
