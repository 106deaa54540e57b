"""
core/network.py: the dual-branch VAE

    x_v ─ visual encoder ─┐                 ┌─ visual decoder ─ x̂_v
                          ├─ shared μ / log σ² heads ─ z ─┤
    x_a ─ audio encoder  ─┘                 └─ audio decoder  ─ x̂_a
                                            z ─ shared classifier ─ P

Every layer is fully-connected; activation is identity unless the config asks for tanh.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from core.tensor import Tensor, add_bias, constant, exp, matmul, tanh
from models.config import ModelConfig
from utils.errors import DimensionError

MODALITIES = ("visual", "audio")


@dataclass(frozen=True)
class LatentCode:
    mu: Tensor
    log_var: Tensor
    z: Optional[Tensor] = None
    eps: Optional[np.ndarray] = None


class ModelParams:
    """Named trainable tensors of both branches, plus class centers (rule-updated, not trained)."""

    def __init__(self, config: ModelConfig, tensors: dict[str, Tensor], centers: np.ndarray):
        self.config  = config
        self.tensors = tensors
        self.centers = centers
        self.extras: dict[str, np.ndarray] = {}     # e.g. z-score statistics, carried by checkpoints

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def items(self):
        return self.tensors.items()

    def layer_shapes(self) -> dict[str, tuple[int, int]]:
        return {name: t.shape for name, t in self.tensors.items()}

    def snapshot(self) -> dict[str, np.ndarray]:
        out = {name: t.data.copy() for name, t in self.tensors.items()}
        out["centers"] = self.centers.copy()
        return out


def layer_shapes(config: ModelConfig) -> dict[str, tuple[int, int]]:
    h, o, c = config.hidden, config.latent, config.classes
    shapes: dict[str, tuple[int, int]] = {}
    for modality in MODALITIES:
        d = config.input_dim(modality)
        shapes[f"{modality}.enc.weight"] = (d, h)
        shapes[f"{modality}.enc.bias"]   = (1, h)
    shapes["shared.mu.weight"]      = (h, o)
    shapes["shared.mu.bias"]        = (1, o)
    shapes["shared.logvar.weight"]  = (h, o)
    shapes["shared.logvar.bias"]    = (1, o)
    shapes["shared.cls.weight"]     = (o, c)
    shapes["shared.cls.bias"]       = (1, c)
    for modality in MODALITIES:
        d = config.input_dim(modality)
        shapes[f"{modality}.dec1.weight"] = (o, h)
        shapes[f"{modality}.dec1.bias"]   = (1, h)
        shapes[f"{modality}.dec2.weight"] = (h, d)
        shapes[f"{modality}.dec2.bias"]   = (1, d)
    return shapes


def init(config: ModelConfig, seed: int) -> ModelParams:
    """Uniform(±1/√fan_in) weights and biases; centers start at zero."""
    rng = np.random.default_rng(seed)
    tensors: dict[str, Tensor] = {}
    shapes = layer_shapes(config)
    for name, shape in shapes.items():
        fan_in = shapes[name.replace(".bias", ".weight")][0]
        bound  = 1.0 / np.sqrt(fan_in)
        tensors[name] = Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)
    centers = np.zeros((config.classes, config.latent))
    return ModelParams(config, tensors, centers)


def zeros_like_config(config: ModelConfig) -> ModelParams:
    tensors = {name: Tensor(np.zeros(shape), requires_grad=True) for name, shape in layer_shapes(config).items()}
    return ModelParams(config, tensors, np.zeros((config.classes, config.latent)))


def _activate(params: ModelParams, t: Tensor) -> Tensor:
    return tanh(t) if params.config.activation == "tanh" else t


def _linear(params: ModelParams, prefix: str, x: Tensor) -> Tensor:
    return add_bias(matmul(x, params[f"{prefix}.weight"]), params[f"{prefix}.bias"])


def encode(params: ModelParams, x, modality: str) -> LatentCode:
    if modality not in MODALITIES:
        raise DimensionError(f"unknown modality '{modality}'")
    x = constant(x)
    expected = params.config.input_dim(modality)
    if x.cols != expected:
        raise DimensionError(f"{modality} features have {x.cols} columns, expected {expected}")
    h       = _activate(params, _linear(params, f"{modality}.enc", x))
    mu      = _linear(params, "shared.mu", h)
    log_var = _linear(params, "shared.logvar", h)
    return LatentCode(mu=mu, log_var=log_var)


def reparameterize(code: LatentCode, eps: np.ndarray) -> LatentCode:
    """z = μ + exp(log σ² / 2) ⊙ ε; ε is a constant on the tape."""
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != code.mu.shape:
        raise DimensionError(f"noise shape {eps.shape} does not match latent shape {code.mu.shape}")
    z = code.mu + exp(code.log_var * 0.5) * Tensor(eps)
    return LatentCode(mu=code.mu, log_var=code.log_var, z=z, eps=eps)


def classify(params: ModelParams, z: Tensor) -> Tensor:
    z = constant(z)
    if z.cols != params.config.latent:
        raise DimensionError(f"latent input has {z.cols} columns, expected {params.config.latent}")
    return _linear(params, "shared.cls", z)


def decode(params: ModelParams, z: Tensor, modality: str) -> Tensor:
    z = constant(z)
    if z.cols != params.config.latent:
        raise DimensionError(f"latent input has {z.cols} columns, expected {params.config.latent}")
    t = _activate(params, _linear(params, f"{modality}.dec1", z))
    return _linear(params, f"{modality}.dec2", t)


def embed_for_retrieval(params: ModelParams, x, modality: str) -> np.ndarray:
    """Deterministic evaluation embedding: the posterior mean μ."""
    return encode(params, x, modality).mu.numpy()
