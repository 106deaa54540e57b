"""
core/trainer.py: two-stage training

Stage 1 (pretrain_vae): minimise the VAE loss only, updating encoders, shared heads
and decoders.
Stage 2 (train_full):   minimise the full weighted objective, then move class
centers toward the batch's latent codes.

Each stage restarts the learning-rate schedule and owns its Adam state. All
randomness (batch order, reparameterisation noise) derives from the run seed.
"""

from __future__ import annotations
import math
from typing import Callable, Literal, Optional

import numpy as np
from tqdm import tqdm

from core import losses
from core.dataset import make_batches, one_hot_matrix
from core.network import ModelParams, decode, classify, encode, reparameterize
from core.optim import AdamState, adam_step, clip_by_global_norm, lr_at
from core.tensor import Tensor, backward, zero_grads
from models.config import TrainRunConfig
from models.data import PairedDataset
from models.state import HistoryRow, LossReport
from utils.errors import DataValidationError, TrainingDivergedError
from utils.log import get_logger

log = get_logger("train")

Stage = Literal["pretrain", "full"]
EpochHook = Callable[[Stage, int, ModelParams], None]

_PART_NAMES = ("rec", "kl", "vae", "corr", "dist", "discr", "center")


def _forward(params: ModelParams, x_v: np.ndarray, x_a: np.ndarray, rng: np.random.Generator):
    code_v = encode(params, x_v, "visual")
    code_a = encode(params, x_a, "audio")
    code_v = reparameterize(code_v, rng.standard_normal(code_v.mu.shape))
    code_a = reparameterize(code_a, rng.standard_normal(code_a.mu.shape))
    xhat_v = decode(params, code_v.z, "visual")
    xhat_a = decode(params, code_a.z, "audio")
    return code_v, code_a, xhat_v, xhat_a


def batch_parts(
    params: ModelParams,
    x_v: np.ndarray,
    x_a: np.ndarray,
    labels: np.ndarray,
    rng: np.random.Generator,
    full: bool,
) -> tuple[losses.LossParts, Tensor, Tensor]:
    """Forward one batch and build every loss term; returns (parts, z_v, z_a)."""
    code_v, code_a, xhat_v, xhat_a = _forward(params, x_v, x_a, rng)
    rec = losses.reconstruction_loss(x_v, xhat_v, x_a, xhat_a)
    kl  = losses.kl_loss(code_v, code_a)
    vae = rec + kl
    terms: dict[str, Tensor] = {"rec": rec, "kl": kl, "vae": vae}

    if full:
        z_v, z_a = code_v.z, code_a.z
        y = one_hot_matrix(labels, params.config.classes)
        terms["corr"]   = losses.correlation_loss(z_v, z_a, labels)
        terms["dist"]   = losses.distance_loss(z_v, z_a)
        terms["discr"]  = losses.discriminative_loss(classify(params, z_a), classify(params, z_v), y)
        terms["center"] = losses.center_loss(z_v, z_a, labels, params.centers)

    parts = losses.LossParts(tensors=terms, **{k: t.item() for k, t in terms.items()})
    return parts, code_v.z, code_a.z


def _check_finite(parts: losses.LossParts, epoch: int) -> None:
    for name in _PART_NAMES:
        value = getattr(parts, name)
        if not math.isfinite(value):
            raise TrainingDivergedError(name, epoch, value)


def _epoch_report(accum: dict[str, float], count: int, cfg: TrainRunConfig, full: bool) -> LossReport:
    """Epoch means of every term; `total` is the objective the stage minimises."""
    mean_parts = losses.LossParts(**{k: accum[k] / count for k in _PART_NAMES})
    report = losses.total_loss(mean_parts, cfg.weights)
    return report if full else report.model_copy(update={"total": mean_parts.vae})


def _run_stage(
    stage: Stage,
    params: ModelParams,
    data: PairedDataset,
    cfg: TrainRunConfig,
    epochs: int,
    epoch_offset: int,
    on_epoch: Optional[EpochHook],
) -> list[HistoryRow]:
    if not 1 <= cfg.batch_size <= data.m:
        raise DataValidationError(f"batch size {cfg.batch_size} must lie in [1, {data.m}]")

    full  = stage == "full"
    rng   = np.random.default_rng([cfg.seed, 2 if full else 1])
    adam  = AdamState.for_params(params.tensors)
    x_v, x_a, y = data.visual.values, data.audio.values, data.labels.ids
    history: list[HistoryRow] = []

    bar = tqdm(range(epochs), desc=stage, disable=None if cfg.progress else True, leave=False)
    for epoch in bar:
        lr = lr_at(cfg.schedule, epoch)
        accum = dict.fromkeys(_PART_NAMES, 0.0)
        losses.diagnostics.reset()

        for idx in make_batches(data.m, cfg.batch_size, cfg.seed, epoch_offset + epoch):
            parts, z_v, z_a = batch_parts(params, x_v[idx], x_a[idx], y[idx], rng, full)
            _check_finite(parts, epoch_offset + epoch)

            objective = losses.total_tensor(parts, cfg.weights) if full else parts.tensors["vae"]
            zero_grads(params.tensors.values())
            grads = backward(objective, params.tensors)
            adam_step(adam, params.tensors, clip_by_global_norm(grads, cfg.grad_clip), lr)

            if full:
                params.centers = losses.update_centers(params.centers, z_v.data, z_a.data, y[idx], cfg.center_alpha)

            for name in _PART_NAMES:
                accum[name] += getattr(parts, name) * len(idx)

        report = _epoch_report(accum, data.m, cfg, full)
        row = HistoryRow(
            stage=stage, epoch=epoch_offset + epoch, report=report, lr=lr,
            degenerate_corr_rows=losses.diagnostics.degenerate_rows,
        )
        history.append(row)
        if row.degenerate_corr_rows:
            log.warning(f"⚠ epoch {row.epoch}: {row.degenerate_corr_rows} zero-variance latent rows in correlation loss")
        log.debug(f"{stage} epoch {row.epoch} lr={lr:.2e} total={report.total:.6f}")
        bar.set_postfix(total=f"{report.total:.4f}")
        if on_epoch is not None:
            on_epoch(stage, row.epoch, params)

    return history


def pretrain_vae(
    params: ModelParams,
    data: PairedDataset,
    cfg: TrainRunConfig,
    on_epoch: Optional[EpochHook] = None,
) -> tuple[ModelParams, list[HistoryRow]]:
    history = _run_stage("pretrain", params, data, cfg, cfg.pretrain_epochs, 0, on_epoch)
    if history:
        log.info(f"✓ Pretrained VAE for {len(history)} epochs | L_V={history[-1].report.vae:.6f}")
    return params, history


def train_full(
    params: ModelParams,
    data: PairedDataset,
    cfg: TrainRunConfig,
    on_epoch: Optional[EpochHook] = None,
) -> tuple[ModelParams, list[HistoryRow]]:
    history = _run_stage("full", params, data, cfg, cfg.full_epochs, cfg.pretrain_epochs, on_epoch)
    log.info(f"✓ Trained full objective for {len(history)} epochs | total={history[-1].report.total:.6f}")
    return params, history


def train(
    params: ModelParams,
    data: PairedDataset,
    cfg: TrainRunConfig,
    on_epoch: Optional[EpochHook] = None,
) -> tuple[ModelParams, list[HistoryRow]]:
    """Pretrain then full training; history rows of both stages in order."""
    params, first  = pretrain_vae(params, data, cfg, on_epoch)
    params, second = train_full(params, data, cfg, on_epoch)
    return params, first + second
