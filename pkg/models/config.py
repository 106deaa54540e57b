from __future__ import annotations
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


# ─── Network ──────────────────────────────────────────────────────────────────

class ModelConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    d_visual: int = Field(1024, ge=1)
    d_audio: int = Field(128, ge=1)
    hidden: int = Field(512, ge=1)
    latent: int = Field(64, ge=1)           # o, the mutual latent space
    classes: int = Field(10, ge=1)          # c, the category latent space
    activation: Literal["identity", "tanh"] = "identity"

    @model_validator(mode="after")
    def _latent_fits_hidden(self) -> "ModelConfig":
        if self.latent > self.hidden:
            raise ValueError(f"latent ({self.latent}) must not exceed hidden ({self.hidden})")
        return self

    def input_dim(self, modality: str) -> int:
        return self.d_visual if modality == "visual" else self.d_audio


# ─── Objective ────────────────────────────────────────────────────────────────

class LossWeights(BaseModel):
    model_config = ConfigDict(frozen=True)

    lambda1: float = Field(0.0001, ge=0.0)  # VAE
    lambda2: float = Field(0.001, ge=0.0)   # correlation
    lambda3: float = Field(0.1, ge=0.0)     # distance
    lambda4: float = Field(0.01, ge=0.0)    # center
    discr: float = Field(1.0, ge=0.0)       # only the full ablation arm keeps this on


# ─── Optimisation ─────────────────────────────────────────────────────────────

class Schedule(BaseModel):
    model_config = ConfigDict(frozen=True)

    base_lr: float = Field(3.5e-5, ge=0.0)
    peak_lr: float = Field(3.5e-4, ge=0.0)
    warmup_epochs: int = Field(10, ge=0)
    decay1_epoch: int = Field(40, ge=0)
    decay1_lr: float = Field(3.5e-5, ge=0.0)
    decay2_epoch: int = Field(70, ge=0)
    decay2_lr: float = Field(3.5e-6, ge=0.0)

    @model_validator(mode="after")
    def _ordered(self) -> "Schedule":
        if not self.warmup_epochs <= self.decay1_epoch <= self.decay2_epoch:
            raise ValueError("schedule epochs must satisfy warmup <= decay1 <= decay2")
        return self


class TrainRunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    epochs: int = Field(500, ge=1)
    pretrain_epochs: int = Field(100, ge=0)
    batch_size: int = Field(64, ge=1)
    seed: int = 0
    weights: LossWeights = Field(default_factory=LossWeights)
    schedule: Schedule = Field(default_factory=Schedule)
    center_alpha: float = Field(0.5, gt=0.0, le=1.0)
    grad_clip: Optional[float] = Field(None, gt=0.0)
    checkpoint_every: int = Field(0, ge=0)
    progress: bool = True

    @model_validator(mode="after")
    def _stages_fit(self) -> "TrainRunConfig":
        if self.pretrain_epochs >= self.epochs:
            raise ValueError(
                f"pretrain_epochs ({self.pretrain_epochs}) must leave at least one full epoch of {self.epochs}"
            )
        return self

    @property
    def full_epochs(self) -> int:
        return self.epochs - self.pretrain_epochs


# ─── Synthetic data ───────────────────────────────────────────────────────────

class SyntheticSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    classes: int = Field(5, ge=1)
    per_class: int = Field(50, ge=1)
    prototype_dim: int = Field(16, ge=1)
    d_visual: int = Field(64, ge=1)
    d_audio: int = Field(32, ge=1)
    prototype_scale: float = Field(1.0, gt=0.0)
    jitter: float = Field(0.3, ge=0.0)
    noise: float = Field(0.1, ge=0.0)
    modality_gap: float = Field(0.5, ge=0.0, le=1.0)   # 0 = both modalities share one mixing per class
    test_fraction: float = Field(0.2, ge=0.0, lt=1.0)
    seed: int = 0
    file_format: Literal["bin", "csv"] = "bin"
    normalize: Literal["none", "zscore"] = "none"      # recorded in the manifests it writes


# ─── Whole run ────────────────────────────────────────────────────────────────

class RunConfig(BaseModel):
    """Everything a command needs, fully resolved before any compute."""

    model_config = ConfigDict(frozen=True)

    output_dir: str = "runs/default"
    train_manifest: Optional[str] = None
    test_manifest: Optional[str] = None
    checkpoint: Optional[str] = None                   # eval input; defaults to <output_dir>/model.ckpt
    synthetic: SyntheticSpec = Field(default_factory=SyntheticSpec)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainRunConfig = Field(default_factory=TrainRunConfig)
    cca_k: Optional[int] = Field(None, ge=1)
    cca_ridge: Optional[float] = Field(None, ge=0.0)
    sensitivity: bool = False

    @property
    def seed(self) -> int:
        return self.train.seed
