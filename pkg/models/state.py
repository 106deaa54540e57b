from __future__ import annotations
from typing import Literal, Optional

from pydantic import BaseModel, Field

Direction = Literal["audio2visual", "visual2audio"]
DIRECTIONS: tuple[Direction, ...] = ("audio2visual", "visual2audio")


# ─── Losses ───────────────────────────────────────────────────────────────────

class LossReport(BaseModel):
    rec: float = 0.0
    kl: float = 0.0
    vae: float = 0.0
    corr: float = 0.0
    dist: float = 0.0
    discr: float = 0.0
    center: float = 0.0
    total: float = 0.0


class HistoryRow(BaseModel):
    stage: Literal["pretrain", "full"]
    epoch: int
    report: LossReport
    lr: float
    degenerate_corr_rows: int = 0


# ─── Evaluation ───────────────────────────────────────────────────────────────

class CategoryAP(BaseModel):
    category: int
    ap: Optional[float]             # None when the class has no queries
    queries: int


class DirectionReport(BaseModel):
    direction: Direction
    mean_ap: float
    queries: int
    skipped_queries: int            # queries with no relevant gallery item
    per_category: list[CategoryAP]
    prc: list[tuple[float, float]]  # (recall, precision) on the 101-point grid
    confusion: list[list[int]]      # c×c, row = query class, col = top-1 class


class EvalReport(BaseModel):
    method: str                     # "vae" or "cca"
    audio2visual: DirectionReport
    visual2audio: DirectionReport

    @property
    def average(self) -> float:
        return (self.audio2visual.mean_ap + self.visual2audio.mean_ap) / 2.0

    def direction(self, name: Direction) -> DirectionReport:
        return self.audio2visual if name == "audio2visual" else self.visual2audio


# ─── Ablation ─────────────────────────────────────────────────────────────────

class AblationRow(BaseModel):
    arm: str
    audio2visual: float
    visual2audio: float
    average: float
    lambda1: float = 0.0
    lambda2: float = 0.0
    lambda3: float = 0.0
    lambda4: float = 0.0
    grid: str = ""                  # sensitivity grid name; empty for ablation arms


# ─── Master pipeline state (LangGraph StateGraph) ────────────────────────────

class PipelineState(BaseModel):
    # Input
    run_config: dict = Field(default_factory=dict)   # RunConfig.model_dump()
    output_dir: str = ""
    checkpoint_path: Optional[str] = None            # eval-only runs point at an existing checkpoint

    # Stage outputs
    train_manifest: Optional[str] = None
    test_manifest: Optional[str] = None
    history: list[HistoryRow] = Field(default_factory=list)
    eval_report: Optional[EvalReport] = None
    artifacts: list[str] = Field(default_factory=list)

    # Pipeline control
    current_stage: str = "idle"
    error: Optional[str] = None
