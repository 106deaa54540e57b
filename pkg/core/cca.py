"""
core/cca.py: linear canonical correlation analysis

Whiten each view with its (ridge-regularised) covariance, take the SVD of the
whitened cross-covariance, and map the singular vectors back:

    T = Σ_aa^{-1/2} Σ_av Σ_vv^{-1/2} = U diag(ρ) Vᵀ
    W_a = Σ_aa^{-1/2} U[:, :k],   W_v = Σ_vv^{-1/2} V[:, :k]
"""

from __future__ import annotations
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import linalg

from utils.errors import DimensionError, NumericalError
from utils.log import get_logger

log = get_logger("cca")

View = Literal["audio", "visual"]

_SINGULAR_TOL = 1e-12


class CcaModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    w_audio: np.ndarray       # d_a×k
    w_visual: np.ndarray      # d_v×k
    mean_audio: np.ndarray    # 1×d_a
    mean_visual: np.ndarray   # 1×d_v
    rho: np.ndarray           # k, non-increasing
    ridge_audio: float
    ridge_visual: float

    @property
    def k(self) -> int:
        return int(self.rho.shape[0])


def default_ridge(cov: np.ndarray) -> float:
    """1e-4 · trace(cov) / d, falling back to 1e-4 for an all-zero covariance."""
    r = 1e-4 * float(np.trace(cov)) / cov.shape[0]
    return r if r > 0.0 else 1e-4


def _inv_sqrt(cov: np.ndarray, view: str) -> np.ndarray:
    evals, evecs = linalg.eigh(cov)
    if evals.min() <= _SINGULAR_TOL * max(evals.max(), 1.0):
        raise NumericalError(
            f"{view} covariance is singular (min eigenvalue {evals.min():.3e}); use a ridge r > 0"
        )
    return (evecs / np.sqrt(evals)) @ evecs.T


def _fix_signs(w_a: np.ndarray, w_v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Make the first nonzero entry of each audio direction positive, flipping its visual partner too."""
    for j in range(w_a.shape[1]):
        nz = np.flatnonzero(np.abs(w_a[:, j]) > 0.0)
        if nz.size and w_a[nz[0], j] < 0.0:
            w_a[:, j] *= -1.0
            w_v[:, j] *= -1.0
    return w_a, w_v


def fit(
    x_audio: np.ndarray,
    x_visual: np.ndarray,
    k: int,
    r: Optional[float] = None,
) -> CcaModel:
    """Fit k canonical pairs. r=None uses the default ridge per view; r=0 disables regularisation."""
    x_audio, x_visual = np.asarray(x_audio, dtype=np.float64), np.asarray(x_visual, dtype=np.float64)
    m = x_audio.shape[0]
    if x_visual.shape[0] != m:
        raise DimensionError(f"views have {m} and {x_visual.shape[0]} rows")
    d_a, d_v = x_audio.shape[1], x_visual.shape[1]
    if not 1 <= k <= min(d_a, d_v, m - 1):
        raise DimensionError(f"k={k} must lie in [1, min(d_a={d_a}, d_v={d_v}, m-1={m - 1})]")
    if r is not None and r < 0.0:
        raise DimensionError(f"ridge must be non-negative, got {r}")

    mean_a = x_audio.mean(axis=0, keepdims=True)
    mean_v = x_visual.mean(axis=0, keepdims=True)
    ca, cv = x_audio - mean_a, x_visual - mean_v
    cov_aa = ca.T @ ca / (m - 1)
    cov_vv = cv.T @ cv / (m - 1)
    cov_av = ca.T @ cv / (m - 1)

    r_a = default_ridge(cov_aa) if r is None else r
    r_v = default_ridge(cov_vv) if r is None else r
    inv_a = _inv_sqrt(cov_aa + r_a * np.eye(d_a), "audio")
    inv_v = _inv_sqrt(cov_vv + r_v * np.eye(d_v), "visual")

    u, s, vt = linalg.svd(inv_a @ cov_av @ inv_v, full_matrices=False)
    w_a, w_v = _fix_signs(inv_a @ u[:, :k], inv_v @ vt.T[:, :k])
    rho = np.clip(s[:k], 0.0, 1.0)

    log.info(f"✓ Fitted CCA k={k} | rho[0]={rho[0]:.4f} rho[-1]={rho[-1]:.4f}")
    return CcaModel(
        w_audio=w_a, w_visual=w_v, mean_audio=mean_a, mean_visual=mean_v,
        rho=rho, ridge_audio=r_a, ridge_visual=r_v,
    )


def transform(model: CcaModel, x: np.ndarray, view: View) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    mean, w = (model.mean_audio, model.w_audio) if view == "audio" else (model.mean_visual, model.w_visual)
    if x.ndim != 2 or x.shape[1] != w.shape[0]:
        raise DimensionError(f"{view} input has shape {x.shape}, model expects {w.shape[0]} columns")
    return (x - mean) @ w
