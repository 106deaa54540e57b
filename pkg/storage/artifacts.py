"""
storage/artifacts.py: run outputs

Fixed layout under the output directory:

    config.resolved, model.ckpt, loss_history.csv, checkpoints/epoch_NNNN.ckpt,
    eval/report.json, eval/map.csv, eval/prc_<direction>.csv,
    eval/per_category_ap.csv, eval/confusion_<direction>.csv,
    ablation.csv, sensitivity.csv

All CSVs: header row, '.' decimal separator, LF line endings.
"""

from __future__ import annotations
import csv
from pathlib import Path
from typing import Iterable, Sequence

from models.state import DIRECTIONS, AblationRow, EvalReport, HistoryRow

CONFIG_FILE   = "config.resolved"
MODEL_FILE    = "model.ckpt"
HISTORY_FILE  = "loss_history.csv"
EVAL_DIR      = "eval"
ABLATION_FILE = "ablation.csv"
SENSITIVITY_FILE = "sensitivity.csv"

HISTORY_COLUMNS = ("stage", "epoch", "rec", "kl", "vae", "corr", "dist", "discr", "center", "total")


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _fmt(x: float) -> str:
    return repr(float(x))


def checkpoint_path(output_dir: Path, epoch: int) -> Path:
    return Path(output_dir) / "checkpoints" / f"epoch_{epoch:04d}.ckpt"


def write_history(output_dir: Path, history: list[HistoryRow]) -> Path:
    rows = [
        (h.stage, h.epoch, *(_fmt(getattr(h.report, k)) for k in HISTORY_COLUMNS[2:]))
        for h in history
    ]
    return _write_csv(Path(output_dir) / HISTORY_FILE, HISTORY_COLUMNS, rows)


def read_history(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_eval(output_dir: Path, report: EvalReport) -> list[Path]:
    eval_dir = Path(output_dir) / EVAL_DIR
    eval_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    report_json = eval_dir / "report.json"
    report_json.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    written.append(report_json)

    written.append(_write_csv(
        eval_dir / "map.csv",
        ("method", "audio2visual", "visual2audio", "average"),
        [(report.method, _fmt(report.audio2visual.mean_ap), _fmt(report.visual2audio.mean_ap), _fmt(report.average))],
    ))

    for name in DIRECTIONS:
        direction = report.direction(name)
        written.append(_write_csv(
            eval_dir / f"prc_{name}.csv", ("recall", "precision"),
            [(_fmt(r), _fmt(p)) for r, p in direction.prc],
        ))
        classes = len(direction.confusion)
        written.append(_write_csv(
            eval_dir / f"confusion_{name}.csv", ("true_class", *(f"top1_{j}" for j in range(classes))),
            [(i, *row) for i, row in enumerate(direction.confusion)],
        ))

    def _cell(entry) -> str:
        return "" if entry.ap is None else _fmt(entry.ap)

    written.append(_write_csv(
        eval_dir / "per_category_ap.csv", ("category", "audio2visual", "visual2audio"),
        [
            (a.category, _cell(a), _cell(v))
            for a, v in zip(report.audio2visual.per_category, report.visual2audio.per_category)
        ],
    ))
    return written


def write_ablation(output_dir: Path, rows: list[AblationRow]) -> Path:
    return _write_csv(
        Path(output_dir) / ABLATION_FILE, ("arm", "audio2visual", "visual2audio", "average"),
        [(r.arm, _fmt(r.audio2visual), _fmt(r.visual2audio), _fmt(r.average)) for r in rows],
    )


def write_sensitivity(output_dir: Path, rows: list[AblationRow]) -> Path:
    return _write_csv(
        Path(output_dir) / SENSITIVITY_FILE,
        ("grid", "lambda1", "lambda2", "lambda3", "lambda4", "audio2visual", "visual2audio", "average"),
        [
            (r.grid, _fmt(r.lambda1), _fmt(r.lambda2), _fmt(r.lambda3), _fmt(r.lambda4),
             _fmt(r.audio2visual), _fmt(r.visual2audio), _fmt(r.average))
            for r in rows
        ],
    )
