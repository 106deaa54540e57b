"""
Node 3b: Baseline Runner
Fits linear CCA on the train split and scores the projected test split with the
same evaluator as the learned embeddings.
"""

from __future__ import annotations
from pathlib import Path

from core import cca
from core.metrics import evaluate_embeddings
from models.config import RunConfig
from models.state import PipelineState
from storage.features import load_dataset
from utils.log import get_logger

log = get_logger("baseline")


def default_k(run: RunConfig, d_audio: int, d_visual: int, m: int) -> int:
    """Latent size of the learned model, capped by what the train split supports."""
    return max(1, min(run.model.latent, d_audio, d_visual, m - 1))


def baseline_runner_node(state: PipelineState) -> PipelineState:
    if state.error:
        return state

    if not state.train_manifest or not state.test_manifest:
        return state.model_copy(update={"error": "CCA needs both train and test manifests", "current_stage": "baseline_failed"})

    try:
        run   = RunConfig.model_validate(state.run_config)
        train = load_dataset(Path(state.train_manifest))
        test  = load_dataset(Path(state.test_manifest))

        k = run.cca_k if run.cca_k is not None else default_k(run, train.audio.d, train.visual.d, train.m)
        model = cca.fit(train.audio.values, train.visual.values, k, run.cca_ridge)

        report = evaluate_embeddings(
            cca.transform(model, test.audio.values, "audio"),
            cca.transform(model, test.visual.values, "visual"),
            test.labels.ids, test.classes, method="cca",
        )
        log.info(f"✓ CCA k={k} | average mAP={report.average:.4f}")
        return state.model_copy(update={"eval_report": report, "current_stage": "baseline_complete"})

    except Exception as e:
        return state.model_copy(update={"error": f"{type(e).__name__}: {e}", "current_stage": "baseline_failed"})
