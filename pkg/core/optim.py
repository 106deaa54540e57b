"""
core/optim.py: Adam and the warmup / step-decay learning-rate schedule
"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from core.tensor import Tensor
from models.config import Schedule
from utils.errors import ContractError


def lr_at(schedule: Schedule, epoch: int) -> float:
    """Linear warmup base→peak over the first warmup epochs, then two step decays."""
    if epoch < 0:
        raise ContractError(f"epoch must be non-negative, got {epoch}")
    if epoch < schedule.warmup_epochs:
        frac = epoch / schedule.warmup_epochs
        return schedule.base_lr + (schedule.peak_lr - schedule.base_lr) * frac
    if epoch < schedule.decay1_epoch:
        return schedule.peak_lr
    if epoch < schedule.decay2_epoch:
        return schedule.decay1_lr
    return schedule.decay2_lr


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: Mapping[str, Tensor], **hyper) -> "AdamState":
        state = cls(**hyper)
        for name, p in params.items():
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        return state


def clip_by_global_norm(grads: dict[str, np.ndarray], max_norm: Optional[float]) -> dict[str, np.ndarray]:
    if max_norm is None:
        return grads
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if norm <= max_norm or norm == 0.0:
        return grads
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}


def adam_step(
    state: AdamState,
    params: Mapping[str, Tensor],
    grads: Mapping[str, np.ndarray],
    lr: float,
) -> None:
    """Bias-corrected Adam update, applied in place to `params[name].data`."""
    if set(grads) != set(params):
        missing = sorted(set(params) ^ set(grads))
        raise ContractError(f"gradients and parameters disagree on names: {missing[:5]}")

    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.data.shape:
            raise ContractError(f"gradient for '{name}' has shape {g.shape}, parameter has {p.data.shape}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        m = state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * (g * g)
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
