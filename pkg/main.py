"""
avretrieval command line

    python main.py synth        --out data/ --classes 5 --per-class 40 --seed 7
    python main.py train        --out runs/a [--train-manifest ... --test-manifest ...]
    python main.py eval         --out runs/a [--checkpoint runs/a/model.ckpt]
    python main.py ablate       --out runs/abl [--sensitivity]
    python main.py baseline-cca --out runs/cca [--k 32 --ridge 1e-4]

Every flag can also be given in a key=value file passed with --config; flags win.
Exit codes: 0 all artifacts written, 1 run failed, 2 bad arguments or configuration.
"""

from __future__ import annotations
import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from dotenv import load_dotenv

# Load environment variables (AVR_LOG_LEVEL) from .env before any logger is built
load_dotenv()

from core.dataset import gen_synthetic                      # noqa: E402
from models.config import RunConfig                         # noqa: E402
from pipeline.experiments import run_ablation, run_sensitivity  # noqa: E402
from pipeline.graph import run_pipeline                     # noqa: E402
from storage.artifacts import CONFIG_FILE, EVAL_DIR, MODEL_FILE, write_ablation, write_sensitivity  # noqa: E402
from storage.features import write_dataset                  # noqa: E402
from utils.errors import AvrError                           # noqa: E402
from utils.log import get_logger                            # noqa: E402
from utils.settings import FLAT_KEYS, load_config_file, resolve_run_config, write_resolved  # noqa: E402

log = get_logger("cli")


# ─── Flags ────────────────────────────────────────────────────────────────────

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value run config (e.g. a previous config.resolved)")
    p.add_argument("--out", dest="output_dir", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--progress", action=argparse.BooleanOptionalAction, default=None,
                   help="show tqdm progress bars on stderr")


def _add_data(p: argparse.ArgumentParser) -> None:
    p.add_argument("--train-manifest", dest="train_manifest")
    p.add_argument("--test-manifest", dest="test_manifest")


def _add_synth(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("synthetic data (used when no manifest is given)")
    g.add_argument("--classes", dest="synth_classes", type=int)
    g.add_argument("--per-class", dest="synth_per_class", type=int)
    g.add_argument("--prototype-dim", dest="synth_prototype_dim", type=int)
    g.add_argument("--d-visual", dest="synth_d_visual", type=int)
    g.add_argument("--d-audio", dest="synth_d_audio", type=int)
    g.add_argument("--prototype-scale", dest="synth_prototype_scale", type=float)
    g.add_argument("--jitter", dest="synth_jitter", type=float)
    g.add_argument("--noise", dest="synth_noise", type=float)
    g.add_argument("--modality-gap", dest="synth_modality_gap", type=float)
    g.add_argument("--test-fraction", dest="synth_test_fraction", type=float)
    g.add_argument("--format", dest="synth_format", choices=("bin", "csv"))
    g.add_argument("--normalize", dest="synth_normalize", choices=("none", "zscore"))


def _add_training(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model and training")
    g.add_argument("--epochs", type=int)
    g.add_argument("--pretrain-epochs", dest="pretrain_epochs", type=int)
    g.add_argument("--batch-size", dest="batch_size", type=int)
    for i in range(1, 5):
        g.add_argument(f"--lambda{i}", type=float)
    g.add_argument("--discr-weight", dest="discr_weight", type=float)
    g.add_argument("--base-lr", dest="base_lr", type=float)
    g.add_argument("--peak-lr", dest="peak_lr", type=float)
    g.add_argument("--warmup-epochs", dest="warmup_epochs", type=int)
    g.add_argument("--decay1-epoch", dest="decay1_epoch", type=int)
    g.add_argument("--decay1-lr", dest="decay1_lr", type=float)
    g.add_argument("--decay2-epoch", dest="decay2_epoch", type=int)
    g.add_argument("--decay2-lr", dest="decay2_lr", type=float)
    g.add_argument("--center-alpha", dest="center_alpha", type=float)
    g.add_argument("--grad-clip", dest="grad_clip", type=float)
    g.add_argument("--checkpoint-every", dest="checkpoint_every", type=int)
    g.add_argument("--hidden", type=int)
    g.add_argument("--latent", type=int)
    g.add_argument("--activation", choices=("identity", "tanh"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="avretrieval", description="Audio-visual cross-modal retrieval runs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic paired dataset (train + test manifests)")
    _add_common(p)
    _add_synth(p)

    p = sub.add_parser("train", help="pretrain + full training, then evaluate on the test split")
    _add_common(p)
    _add_data(p)
    _add_synth(p)
    _add_training(p)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a test split")
    _add_common(p)
    _add_data(p)
    _add_synth(p)
    p.add_argument("--checkpoint", help=f"defaults to <out>/{MODEL_FILE}")

    p = sub.add_parser("ablate", help="train the center / correlation / distance / full arms")
    _add_common(p)
    _add_data(p)
    _add_synth(p)
    _add_training(p)
    p.add_argument("--sensitivity", action="store_true", default=None,
                   help="also sweep the λ grid into sensitivity.csv")

    p = sub.add_parser("baseline-cca", help="linear CCA baseline through the same evaluator")
    _add_common(p)
    _add_data(p)
    _add_synth(p)
    p.add_argument("--k", dest="cca_k", type=int, help="canonical pairs, at most min(d_audio, d_visual)")
    p.add_argument("--ridge", dest="cca_ridge", type=float, help="ridge r added to each covariance")
    p.add_argument("--latent", type=int, help="default k when --k is absent")

    return parser


def _resolve(args: argparse.Namespace) -> RunConfig:
    overrides = {k: v for k, v in vars(args).items() if k in FLAT_KEYS}
    return resolve_run_config(load_config_file(args.config), overrides)


# ─── Commands ─────────────────────────────────────────────────────────────────

def cmd_synth(run: RunConfig) -> int:
    out = Path(run.output_dir)
    write_resolved(run, out / CONFIG_FILE)
    train, test = gen_synthetic(run.synthetic)
    for ds in (train, test):
        path = write_dataset(ds, out, run.synthetic.file_format, run.synthetic.normalize)
        log.info(f"✓ {ds.split}: {ds.m} pairs → {path}")
    return 0


def _finish(kind: str, run: RunConfig, checkpoint: Optional[str] = None) -> int:
    final = run_pipeline(kind, run, checkpoint)
    if final.error:
        log.error(f"✗ {final.current_stage}: {final.error}")
        return 1
    report = final.eval_report
    log.info(
        f"✓ {report.method} mAP audio2visual={report.audio2visual.mean_ap:.4f} "
        f"visual2audio={report.visual2audio.mean_ap:.4f} average={report.average:.4f}"
    )
    return 0


def cmd_train(run: RunConfig) -> int:
    write_resolved(run, Path(run.output_dir) / CONFIG_FILE)
    return _finish("train", run)


def cmd_eval(run: RunConfig) -> int:
    out = Path(run.output_dir)
    write_resolved(run, out / EVAL_DIR / CONFIG_FILE)
    return _finish("eval", run, run.checkpoint or str(out / MODEL_FILE))


def cmd_ablate(run: RunConfig) -> int:
    out = Path(run.output_dir)
    write_resolved(run, out / CONFIG_FILE)
    path = write_ablation(out, run_ablation(run))
    log.info(f"✓ ablation table → {path}")
    if run.sensitivity:
        path = write_sensitivity(out, run_sensitivity(run))
        log.info(f"✓ sensitivity table → {path}")
    return 0


def cmd_baseline_cca(run: RunConfig) -> int:
    write_resolved(run, Path(run.output_dir) / CONFIG_FILE)
    return _finish("baseline", run)


COMMANDS = {
    "synth":        cmd_synth,
    "train":        cmd_train,
    "eval":         cmd_eval,
    "ablate":       cmd_ablate,
    "baseline-cca": cmd_baseline_cca,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        run = _resolve(args)
    except AvrError as e:
        log.error(f"✗ {e}")
        return 2

    try:
        return COMMANDS[args.command](run)
    except AvrError as e:
        log.error(f"✗ {type(e).__name__}: {e}")
        return 1
    except OSError as e:
        log.error(f"✗ cannot write output: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
