from __future__ import annotations
from typing import Callable

import numpy as np
import pytest

from core.dataset import gen_synthetic
from models.config import LossWeights, ModelConfig, RunConfig, Schedule, SyntheticSpec, TrainRunConfig

# Faster than the default schedule; the shape (warmup, plateau, two decays) is the same.
FAST_SCHEDULE = Schedule(
    base_lr=1e-4, peak_lr=1e-3, warmup_epochs=5,
    decay1_epoch=100, decay1_lr=3e-4, decay2_epoch=130, decay2_lr=1e-4,
)


def numeric_grad(f: Callable[[], float], arr: np.ndarray, h: float = 1e-6, entries=None) -> np.ndarray:
    """Central finite differences of f() w.r.t. `arr`, perturbed in place."""
    grad = np.zeros_like(arr)
    idx_iter = entries if entries is not None else list(np.ndindex(arr.shape))
    for idx in idx_iter:
        old = arr[idx]
        arr[idx] = old + h
        up = f()
        arr[idx] = old - h
        down = f()
        arr[idx] = old
        grad[idx] = (up - down) / (2.0 * h)
    return grad


def assert_grad_close(analytic: np.ndarray, numeric: np.ndarray, rtol: float = 1e-4, atol: float = 1e-7) -> None:
    np.testing.assert_allclose(analytic, numeric, rtol=rtol, atol=atol)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_model() -> ModelConfig:
    return ModelConfig(d_visual=6, d_audio=4, hidden=5, latent=3, classes=3)


@pytest.fixture
def small_spec() -> SyntheticSpec:
    return SyntheticSpec(classes=3, per_class=10, prototype_dim=4, d_visual=6, d_audio=4, seed=3)


@pytest.fixture
def small_data(small_spec):
    return gen_synthetic(small_spec)


@pytest.fixture
def tiny_train_cfg() -> TrainRunConfig:
    return TrainRunConfig(
        epochs=6, pretrain_epochs=2, batch_size=8, seed=5,
        schedule=FAST_SCHEDULE, weights=LossWeights(), progress=False,
    )


@pytest.fixture
def tiny_run(tmp_path, small_spec, tiny_model, tiny_train_cfg) -> RunConfig:
    return RunConfig(
        output_dir=str(tmp_path / "run"),
        synthetic=small_spec,
        model=tiny_model,
        train=tiny_train_cfg,
    )
