"""
Ablation and λ-sensitivity runs

Each arm is a full train pipeline on the same data and seed, written to its own
subdirectory of the output directory; arms differ only in their LossWeights.

    center       center loss
    correlation  center + correlation losses
    distance     center + correlation + distance losses
    full         every term, adding the VAE and discriminative losses

Every arm shares the VAE pretraining stage; the weights apply to the full stage.

The sensitivity grid first fixes λ3, λ4 and sweeps λ1, λ2 over SENSITIVITY_VALUES,
then fixes λ1, λ2 and sweeps λ3, λ4.
"""

from __future__ import annotations
from itertools import product
from pathlib import Path

from models.config import LossWeights, RunConfig
from models.state import AblationRow, PipelineState
from pipeline.graph import run_pipeline
from pipeline.nodes.ingest_node import ingest_node
from utils.errors import PipelineError
from utils.log import get_logger

log = get_logger("ablate")

ARM_NAMES = ("center", "correlation", "distance", "full")
SENSITIVITY_VALUES = (0.001, 0.01, 0.1, 1.0)

# Each arm adds one term to the previous one; weights not listed are zeroed.
_ARM_TERMS = {
    "center":      ("lambda4",),
    "correlation": ("lambda4", "lambda2"),
    "distance":    ("lambda4", "lambda2", "lambda3"),
}
_WEIGHT_NAMES = ("discr", "lambda1", "lambda2", "lambda3", "lambda4")


def arm_weights(arm: str, base: LossWeights) -> LossWeights:
    if arm == "full":
        return base
    if arm not in _ARM_TERMS:
        raise ValueError(f"unknown ablation arm '{arm}', expected one of {ARM_NAMES}")
    return base.model_copy(update={name: 0.0 for name in _WEIGHT_NAMES if name not in _ARM_TERMS[arm]})


def sensitivity_grid(base: LossWeights) -> list[tuple[str, LossWeights]]:
    grid: list[tuple[str, LossWeights]] = []
    for l1, l2 in product(SENSITIVITY_VALUES, repeat=2):
        grid.append(("lambda1_lambda2", base.model_copy(update={"lambda1": l1, "lambda2": l2})))
    for l3, l4 in product(SENSITIVITY_VALUES, repeat=2):
        grid.append(("lambda3_lambda4", base.model_copy(update={"lambda3": l3, "lambda4": l4})))
    return grid


def prepare_data(run: RunConfig) -> RunConfig:
    """Resolve (or synthesize) the dataset once so every arm trains on the same files."""
    state = ingest_node(PipelineState(run_config=run.model_dump(), output_dir=run.output_dir))
    if state.error:
        raise PipelineError(state.current_stage, state.error)
    return run.model_copy(update={"train_manifest": state.train_manifest, "test_manifest": state.test_manifest})


def run_arm(run: RunConfig, name: str, weights: LossWeights, output_dir: Path, grid: str = "") -> AblationRow:
    arm_run = run.model_copy(update={
        "output_dir": str(output_dir),
        "train": run.train.model_copy(update={"weights": weights}),
    })
    final = run_pipeline("train", arm_run)
    if final.error:
        raise PipelineError(final.current_stage, f"arm '{name}': {final.error}")

    report = final.eval_report
    log.info(f"✓ {name}: average mAP={report.average:.4f}")
    return AblationRow(
        arm=name,
        audio2visual=report.audio2visual.mean_ap,
        visual2audio=report.visual2audio.mean_ap,
        average=report.average,
        lambda1=weights.lambda1, lambda2=weights.lambda2,
        lambda3=weights.lambda3, lambda4=weights.lambda4,
        grid=grid,
    )


def run_ablation(run: RunConfig) -> list[AblationRow]:
    run  = prepare_data(run)
    base = run.train.weights
    out  = Path(run.output_dir) / "arms"
    return [run_arm(run, arm, arm_weights(arm, base), out / arm) for arm in ARM_NAMES]


def run_sensitivity(run: RunConfig) -> list[AblationRow]:
    run = prepare_data(run)
    out = Path(run.output_dir) / "sensitivity"
    rows: list[AblationRow] = []
    for i, (grid, weights) in enumerate(sensitivity_grid(run.train.weights)):
        name = f"{grid}_{i:02d}"
        rows.append(run_arm(run, name, weights, out / name, grid=grid))
    return rows
