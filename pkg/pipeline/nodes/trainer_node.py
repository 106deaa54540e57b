"""
Node 3: Train
Continues from the pretrained weights and minimises the full weighted objective,
updating class centers after each batch. Writes the final model.ckpt.
"""

from __future__ import annotations
from pathlib import Path

from core import trainer
from core.dataset import apply_zscore
from models.config import RunConfig
from models.state import PipelineState
from pipeline.nodes.pretrain_node import checkpoint_hook
from storage.artifacts import MODEL_FILE
from storage.checkpoint import load_checkpoint, save_checkpoint
from storage.features import load_dataset
from utils.log import get_logger

log = get_logger("train")


def trainer_node(state: PipelineState) -> PipelineState:
    if state.error:
        return state

    if not state.checkpoint_path:
        return state.model_copy(update={"error": "No pretrained weights — run pretrain first", "current_stage": "train_failed"})

    try:
        run    = RunConfig.model_validate(state.run_config)
        params = load_checkpoint(Path(state.checkpoint_path), expected=run.model)
        data   = load_dataset(Path(state.train_manifest))
        if params.extras:
            data = apply_zscore(data, params.extras)

        params, history = trainer.train_full(params, data, run.train, checkpoint_hook(state, run))
        path = save_checkpoint(params, Path(state.output_dir) / MODEL_FILE)

        log.info(f"✓ Model written → {path}")
        return state.model_copy(update={
            "checkpoint_path": str(path),
            "history": state.history + history,
            "current_stage": "train_complete",
        })

    except Exception as e:
        return state.model_copy(update={"error": f"{type(e).__name__}: {e}", "current_stage": "train_failed"})
