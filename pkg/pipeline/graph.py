"""
Run orchestrator
LangGraph StateGraphs wiring the nodes into one pipeline per command, with
conditional edges that abort on the first node error.

    train:     ingest → pretrain → train → evaluator → reporter
    eval:      ingest → evaluator → reporter
    baseline:  ingest → baseline_runner → reporter
"""

from __future__ import annotations
from typing import Literal

from langgraph.graph import StateGraph, END
from langgraph.graph.state import CompiledStateGraph

from models.config import RunConfig
from models.state import PipelineState
from pipeline.nodes.ingest_node          import ingest_node
from pipeline.nodes.pretrain_node        import pretrain_node
from pipeline.nodes.trainer_node         import trainer_node
from pipeline.nodes.evaluator_node       import evaluator_node
from pipeline.nodes.baseline_runner_node import baseline_runner_node
from pipeline.nodes.reporter_node        import reporter_node

PipelineKind = Literal["train", "eval", "baseline"]

_NODES = {
    "ingest":          ingest_node,
    "pretrain":        pretrain_node,
    "train":           trainer_node,
    "evaluator":       evaluator_node,
    "baseline_runner": baseline_runner_node,
    "reporter":        reporter_node,
}

_ROUTES: dict[str, tuple[str, ...]] = {
    "train":    ("ingest", "pretrain", "train", "evaluator", "reporter"),
    "eval":     ("ingest", "evaluator", "reporter"),
    "baseline": ("ingest", "baseline_runner", "reporter"),
}


# ─── Build graph ──────────────────────────────────────────────────────────────

def build_pipeline(kind: PipelineKind) -> CompiledStateGraph:
    # LangGraph requires a dict-based state schema, so we use a thin wrapper
    builder = StateGraph(dict)
    route = _ROUTES[kind]

    for name in route:
        builder.add_node(name, _wrap(_NODES[name]))

    builder.set_entry_point(route[0])
    for from_node, to_node in zip(route, route[1:]):
        _add_conditional(builder, from_node, to_node)

    builder.add_edge(route[-1], END)
    return builder.compile()


def _add_conditional(builder: StateGraph, from_node: str, to_node: str) -> None:
    builder.add_conditional_edges(
        from_node,
        lambda state: END if state.get("error") else to_node,
        {to_node: to_node, END: END},
    )


def _wrap(fn):
    """Wrap a PipelineState → PipelineState function to work with LangGraph's dict state."""
    def _node(state: dict) -> dict:
        ps     = PipelineState(**state)
        result = fn(ps)
        return result.model_dump()
    return _node


# ─── Public API ───────────────────────────────────────────────────────────────

_pipelines: dict[str, CompiledStateGraph] = {}


def get_pipeline(kind: PipelineKind) -> CompiledStateGraph:
    if kind not in _pipelines:
        _pipelines[kind] = build_pipeline(kind)
    return _pipelines[kind]


def run_pipeline(kind: PipelineKind, run: RunConfig, checkpoint_path: str | None = None) -> PipelineState:
    """Run one pipeline to completion and return the final PipelineState (check `.error`)."""
    initial_state = PipelineState(
        run_config=run.model_dump(),
        output_dir=run.output_dir,
        checkpoint_path=checkpoint_path,
        current_stage="starting",
    ).model_dump()

    final_state_dict = get_pipeline(kind).invoke(initial_state)
    return PipelineState(**final_state_dict)
