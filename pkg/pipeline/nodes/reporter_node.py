"""
Node 5: Reporter
Writes the loss history and evaluation artifacts into the output directory.
"""

from __future__ import annotations
from pathlib import Path

from models.state import PipelineState
from storage.artifacts import write_eval, write_history
from utils.log import get_logger

log = get_logger("reporter")


def reporter_node(state: PipelineState) -> PipelineState:
    if state.error:
        return state

    if not state.history and not state.eval_report:
        return state.model_copy(update={"error": "Nothing to report", "current_stage": "reporter_failed"})

    try:
        out = Path(state.output_dir)
        written: list[Path] = []
        if state.history:
            written.append(write_history(out, state.history))
        if state.eval_report:
            written.extend(write_eval(out, state.eval_report))

        log.info(f"✓ {len(written)} artifacts → {out}")
        return state.model_copy(update={
            "artifacts": state.artifacts + [str(p) for p in written],
            "current_stage": "complete",
        })

    except Exception as e:
        return state.model_copy(update={"error": f"{type(e).__name__}: {e}", "current_stage": "reporter_failed"})
