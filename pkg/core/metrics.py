"""
core/metrics.py: cross-modal retrieval evaluation

Queries of one modality rank the whole gallery of the other by cosine similarity
(ties broken by ascending gallery index). A gallery item is relevant when it shares
the query's category. Reported: AP / mAP over the full ranking, the 101-point
interpolated precision-recall curve, per-category AP and the top-1 confusion matrix.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from models.state import CategoryAP, DirectionReport, EvalReport
from utils.errors import DimensionError, DomainError

RECALL_GRID = np.linspace(0.0, 1.0, 101)


# ─── Similarity and ranking ───────────────────────────────────────────────────

def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """u·v / (‖u‖‖v‖); 0 when either vector is zero."""
    u, v = np.ravel(u).astype(np.float64), np.ravel(v).astype(np.float64)
    if u.shape != v.shape:
        raise DimensionError(f"cosine of vectors with lengths {u.size} and {v.size}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.where(norms > 0.0, x / np.where(norms > 0.0, norms, 1.0), 0.0)


def cosine_matrix(queries: np.ndarray, gallery: np.ndarray) -> np.ndarray:
    queries, gallery = np.atleast_2d(queries), np.atleast_2d(gallery)
    if queries.shape[1] != gallery.shape[1]:
        raise DimensionError(f"query width {queries.shape[1]} differs from gallery width {gallery.shape[1]}")
    return _unit_rows(queries) @ _unit_rows(gallery).T


@dataclass(frozen=True)
class RankedRetrieval:
    """Rankings for a set of queries: row q of `ranking` orders every gallery index for query q."""

    direction: str
    ranking: np.ndarray          # Q×G gallery indices, descending cosine
    scores: np.ndarray           # Q×G cosine along the ranking
    relevant: np.ndarray         # Q×G bool along the ranking
    query_labels: np.ndarray
    gallery_labels: np.ndarray

    @property
    def queries(self) -> int:
        return int(self.ranking.shape[0])


def retrieve(
    query_emb: np.ndarray,
    gallery_emb: np.ndarray,
    query_labels: np.ndarray,
    gallery_labels: np.ndarray,
    direction: str,
    exclude_self: bool = False,
) -> RankedRetrieval:
    """
    Rank the gallery for every query. `exclude_self` drops gallery item i from query i's
    list (same split, same modality); cross-modal directions keep the paired item.
    """
    query_labels, gallery_labels = np.asarray(query_labels), np.asarray(gallery_labels)
    if query_emb.shape[0] == 0 or gallery_emb.shape[0] == 0:
        raise DomainError("retrieval needs at least one query and one gallery item")
    if query_labels.shape[0] != query_emb.shape[0] or gallery_labels.shape[0] != gallery_emb.shape[0]:
        raise DimensionError("labels are not aligned with embeddings")
    if exclude_self and gallery_emb.shape[0] < 2:
        raise DomainError("excluding the query itself needs a gallery of at least two items")

    sims = cosine_matrix(query_emb, gallery_emb)
    if exclude_self:
        sims = sims.copy()
        np.fill_diagonal(sims, -np.inf)
    ranking = np.argsort(-sims, axis=1, kind="stable")
    if exclude_self:
        ranking = ranking[:, :-1]
    scores   = np.take_along_axis(sims, ranking, axis=1)
    relevant = gallery_labels[ranking] == query_labels[:, None]
    return RankedRetrieval(direction, ranking, scores, relevant, query_labels, gallery_labels)


# ─── Average precision ───────────────────────────────────────────────────────

def average_precision(flags) -> Optional[float]:
    """(1/R)·Σ_k precision@k·rel(k) over the full list; None when nothing is relevant."""
    rel = np.asarray(flags, dtype=bool)
    total = int(rel.sum())
    if total == 0:
        return None
    hits = np.cumsum(rel)
    precision = hits / np.arange(1, rel.size + 1)
    return float(np.cumsum(precision[rel])[-1] / total)


def query_aps(ret: RankedRetrieval) -> list[Optional[float]]:
    return [average_precision(row) for row in ret.relevant]


def mean_ap(
    query_emb: np.ndarray,
    gallery_emb: np.ndarray,
    query_labels: np.ndarray,
    gallery_labels: Optional[np.ndarray] = None,
) -> float:
    gallery_labels = query_labels if gallery_labels is None else gallery_labels
    ret = retrieve(query_emb, gallery_emb, query_labels, gallery_labels, "custom")
    return _mean([ap for ap in query_aps(ret) if ap is not None])


def _mean(values: list[float]) -> float:
    return float(np.mean(values)) if values else 0.0


# ─── Curves, tables, matrices ─────────────────────────────────────────────────

def _interpolated_curve(rel: np.ndarray) -> Optional[np.ndarray]:
    total = int(rel.sum())
    if total == 0:
        return None
    hits = np.cumsum(rel)
    precision = hits / np.arange(1, rel.size + 1)
    recall = hits / total
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_GRID, side="left")
    return envelope[np.minimum(idx, rel.size - 1)]


def prc(ret: RankedRetrieval) -> list[tuple[float, float]]:
    """Interpolated precision on a 101-point recall grid, averaged over queries."""
    curves = [c for c in (_interpolated_curve(row) for row in ret.relevant) if c is not None]
    if not curves:
        return [(float(r), 0.0) for r in RECALL_GRID]
    mean_curve = np.mean(np.vstack(curves), axis=0)
    return [(float(r), float(p)) for r, p in zip(RECALL_GRID, mean_curve)]


def prc_area(points: list[tuple[float, float]]) -> float:
    recall, precision = zip(*points)
    return float(trapezoid(precision, recall))


def confusion(ret: RankedRetrieval, classes: int) -> np.ndarray:
    """Row = query category, column = category of the top-1 retrieved item."""
    matrix = np.zeros((classes, classes), dtype=np.int64)
    top1 = ret.gallery_labels[ret.ranking[:, 0]]
    np.add.at(matrix, (ret.query_labels, top1), 1)
    return matrix


def per_category_ap(ret: RankedRetrieval, classes: int) -> list[CategoryAP]:
    aps = query_aps(ret)
    table: list[CategoryAP] = []
    for j in range(classes):
        mine = [ap for ap, y in zip(aps, ret.query_labels) if y == j and ap is not None]
        table.append(CategoryAP(category=j, ap=_mean(mine) if mine else None, queries=len(mine)))
    return table


# ─── Reports ──────────────────────────────────────────────────────────────────

def evaluate_direction(ret: RankedRetrieval, classes: int) -> DirectionReport:
    aps = query_aps(ret)
    kept = [ap for ap in aps if ap is not None]
    return DirectionReport(
        direction=ret.direction,
        mean_ap=_mean(kept),
        queries=ret.queries,
        skipped_queries=len(aps) - len(kept),
        per_category=per_category_ap(ret, classes),
        prc=prc(ret),
        confusion=confusion(ret, classes).tolist(),
    )


def evaluate_embeddings(
    emb_audio: np.ndarray,
    emb_visual: np.ndarray,
    labels: np.ndarray,
    classes: int,
    method: str,
) -> EvalReport:
    """Audio→visual and visual→audio retrieval over paired test embeddings."""
    a2v = retrieve(emb_audio, emb_visual, labels, labels, "audio2visual")
    v2a = retrieve(emb_visual, emb_audio, labels, labels, "visual2audio")
    return EvalReport(
        method=method,
        audio2visual=evaluate_direction(a2v, classes),
        visual2audio=evaluate_direction(v2a, classes),
    )
