"""
Node 4: Evaluator
Embeds the test split with the checkpoint's posterior means and scores both
retrieval directions (mAP, PRC, per-category AP, confusion).
"""

from __future__ import annotations
from pathlib import Path

from core.dataset import apply_zscore
from core.metrics import evaluate_embeddings
from core.network import embed_for_retrieval
from models.state import PipelineState
from storage.checkpoint import load_checkpoint
from storage.features import load_dataset
from utils.errors import ContractError
from utils.log import get_logger

log = get_logger("evaluator")


def evaluator_node(state: PipelineState) -> PipelineState:
    if state.error:
        return state

    if not state.checkpoint_path:
        return state.model_copy(update={"error": "No checkpoint to evaluate", "current_stage": "evaluator_failed"})

    if not state.test_manifest:
        return state.model_copy(update={"error": "No test manifest — run ingest first", "current_stage": "evaluator_failed"})

    try:
        params = load_checkpoint(Path(state.checkpoint_path))
        test   = load_dataset(Path(state.test_manifest))
        cfg    = params.config

        for modality, expected in (("visual", cfg.d_visual), ("audio", cfg.d_audio)):
            got = test.features(modality).shape[1]
            if got != expected:
                raise ContractError(
                    f"checkpoint {state.checkpoint_path} expects {modality} width {expected}, "
                    f"test data {state.test_manifest} has {got}"
                )
        if test.classes != cfg.classes:
            raise ContractError(f"checkpoint has {cfg.classes} classes, test data has {test.classes}")

        if params.extras:
            test = apply_zscore(test, params.extras)

        report = evaluate_embeddings(
            embed_for_retrieval(params, test.audio.values, "audio"),
            embed_for_retrieval(params, test.visual.values, "visual"),
            test.labels.ids, test.classes, method="vae",
        )
        log.info(
            f"✓ mAP audio2visual={report.audio2visual.mean_ap:.4f} "
            f"visual2audio={report.visual2audio.mean_ap:.4f} average={report.average:.4f}"
        )
        return state.model_copy(update={"eval_report": report, "current_stage": "evaluator_complete"})

    except Exception as e:
        return state.model_copy(update={"error": f"{type(e).__name__}: {e}", "current_stage": "evaluator_failed"})
