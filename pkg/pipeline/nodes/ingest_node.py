"""
Node 1: Ingest
Resolves the train/test datasets for the run. With no manifests configured, a
synthetic paired dataset is generated into <output_dir>/data first. Every manifest
is loaded once here so format and pairing errors stop the pipeline early.
"""

from __future__ import annotations
from pathlib import Path

from core.dataset import gen_synthetic
from models.config import RunConfig
from models.state import PipelineState
from storage.features import load_dataset, write_dataset
from utils.log import get_logger

log = get_logger("ingest")


def ingest_node(state: PipelineState) -> PipelineState:
    try:
        run = RunConfig.model_validate(state.run_config)
        train_manifest, test_manifest = run.train_manifest, run.test_manifest

        if not train_manifest and not test_manifest:
            data_dir = Path(state.output_dir) / "data"
            train_ds, test_ds = gen_synthetic(run.synthetic)
            fmt, norm = run.synthetic.file_format, run.synthetic.normalize
            train_manifest = str(write_dataset(train_ds, data_dir, fmt, norm))
            test_manifest  = str(write_dataset(test_ds, data_dir, fmt, norm))
            log.info(f"✓ Generated synthetic dataset into {data_dir} (train={train_ds.m}, test={test_ds.m})")

        for manifest in (train_manifest, test_manifest):
            if not manifest:
                continue
            ds = load_dataset(Path(manifest))
            for modality, expected in (("visual", run.model.d_visual), ("audio", run.model.d_audio)):
                got = ds.features(modality).shape[1]
                if got != expected:
                    return state.model_copy(update={
                        "error": f"{manifest}: {modality} width {got} differs from model config {expected}",
                        "current_stage": "ingest_failed",
                    })
            if ds.classes != run.model.classes:
                return state.model_copy(update={
                    "error": f"{manifest}: {ds.classes} classes, model config expects {run.model.classes}",
                    "current_stage": "ingest_failed",
                })

        return state.model_copy(update={
            "train_manifest": train_manifest,
            "test_manifest": test_manifest,
            "current_stage": "ingest_complete",
        })

    except Exception as e:
        return state.model_copy(update={"error": f"{type(e).__name__}: {e}", "current_stage": "ingest_failed"})
