"""
Node 2: Pretrain
Initialises the network from the run seed and trains the VAE branches alone.
Hands the weights to the next node through checkpoints/pretrained.ckpt.
"""

from __future__ import annotations
from pathlib import Path

from core import network, trainer
from core.dataset import apply_zscore, fit_zscore
from models.config import RunConfig
from models.data import PairedDataset
from models.state import PipelineState
from storage.artifacts import checkpoint_path
from storage.checkpoint import save_checkpoint
from storage.features import load_dataset, manifest_flag
from utils.log import get_logger

log = get_logger("pretrain")


def load_train_split(manifest: str, params: network.ModelParams) -> PairedDataset:
    """Load the train split; with normalize=zscore, fit statistics on it and keep them in `params.extras`."""
    ds = load_dataset(Path(manifest))
    if manifest_flag(Path(manifest), "normalize", "none") == "zscore":
        params.extras = fit_zscore(ds)
        ds = apply_zscore(ds, params.extras)
    return ds


def pretrain_node(state: PipelineState) -> PipelineState:
    if state.error:
        return state

    if not state.train_manifest:
        return state.model_copy(update={"error": "No train manifest — run ingest first", "current_stage": "pretrain_failed"})

    try:
        run    = RunConfig.model_validate(state.run_config)
        params = network.init(run.model, run.seed)
        data   = load_train_split(state.train_manifest, params)

        params, history = trainer.pretrain_vae(params, data, run.train, checkpoint_hook(state, run))
        path = save_checkpoint(params, Path(state.output_dir) / "checkpoints" / "pretrained.ckpt")

        log.info(f"✓ {len(history)} pretrain epochs | weights → {path}")
        return state.model_copy(update={
            "checkpoint_path": str(path),
            "history": state.history + history,
            "current_stage": "pretrain_complete",
        })

    except Exception as e:
        return state.model_copy(update={"error": f"{type(e).__name__}: {e}", "current_stage": "pretrain_failed"})


def checkpoint_hook(state: PipelineState, run: RunConfig):
    every = run.train.checkpoint_every
    if every <= 0:
        return None

    def _hook(stage: str, epoch: int, params: network.ModelParams) -> None:
        if (epoch + 1) % every == 0:
            save_checkpoint(params, checkpoint_path(Path(state.output_dir), epoch))

    return _hook
