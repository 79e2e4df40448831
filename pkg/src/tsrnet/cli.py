"""Command-line entry point: ``tsrnet {train,eval,predict,report}``.

Lines meant for scripts (``test_accuracy=...`` and predict CSV rows) go to
standard output; progress logs go to standard error.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import json
import logging
import os
import subprocess
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig, parse_config
from .dataset import (DatasetError, dataset_digest, default_class_names, load_class_names, load_dataset,
                      load_example, stratified_split)
from .images import ImageDecodeError
from .metrics import (ReportFormatError, classification_report, confusion_matrix, fmt, read_classification_report_csv,
                      read_confusion_matrix_csv, read_curves_csv, read_per_class_accuracy_csv, render_reports)
from .network import predict
from .training import fit

log = logging.getLogger("tsrnet")

_EXPECTED_ERRORS = (ConfigError, DatasetError, CheckpointError, ImageDecodeError, ReportFormatError, OSError, ValueError)


def version_string() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent, capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"v{__version__}-{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"v{__version__}"


def cmd_train(cfg: RunConfig) -> int:
    cfg.require("data_root", "out_dir")
    root = Path(cfg.data_root)
    out_dir = Path(cfg.out_dir)
    examples = load_dataset(root)
    names = load_class_names(root)
    split = stratified_split(examples, cfg.test_fraction, cfg.val_fraction, cfg.seed, names)
    log.info("split: %d train / %d validation / %d test", len(split.train), len(split.validation), len(split.test))
    digest = dataset_digest(root)
    metadata = {
        "seed": cfg.seed,
        "test_fraction": cfg.test_fraction,
        "val_fraction": cfg.val_fraction,
        "class_names": names,
        "data_sha256": digest,
    }
    result = fit(split, cfg.train_config(), metadata=metadata)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = cfg.checkpoint_path()
    ckpt_path.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(ckpt_path, result.checkpoint)
    render_reports(None, None, result.curves, out_dir)
    manifest = {
        "version": version_string(),
        "seed": cfg.seed,
        "config": dataclasses.asdict(cfg),
        "parameter_count": result.checkpoint.spec.param_count(),
        "data_root": str(root),
        "data_sha256": digest,
        "split_sizes": {"train": len(split.train), "validation": len(split.validation), "test": len(split.test)},
        "epochs_run": len(result.curves),
        "best_epoch": result.best_epoch,
        "best_val_acc": result.checkpoint.best_value if result.curves else None,
        "checkpoint": str(ckpt_path),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    log.info("wrote %s", ckpt_path)
    return 0


def cmd_eval(cfg: RunConfig) -> int:
    cfg.require("data_root", "out_dir")
    ckpt = load_checkpoint(cfg.checkpoint_path())
    meta = ckpt.metadata
    # the test part is reproduced from the split settings recorded at training time
    split = stratified_split(
        load_dataset(cfg.data_root),
        meta.get("test_fraction", cfg.test_fraction),
        meta.get("val_fraction", cfg.val_fraction),
        meta.get("seed", cfg.seed),
    )
    if not split.test:
        raise DatasetError("empty test split")
    images = np.stack([e.image for e in split.test])
    truths = np.array([e.label for e in split.test])
    preds = np.argmax(predict(ckpt.spec, ckpt.params, images), axis=1)
    cm = confusion_matrix(preds, truths, ckpt.spec.n_classes)
    report = classification_report(cm)
    render_reports(cm, report, None, cfg.out_dir)
    print(f"test_accuracy={fmt(report.accuracy)}")
    return 0


def cmd_predict(cfg: RunConfig, image_paths: list[str]) -> int:
    if not image_paths:
        raise ConfigError("predict needs at least one image path")
    ckpt = load_checkpoint(cfg.checkpoint_path())
    names = ckpt.metadata.get("class_names")
    if not names:
        names = load_class_names(cfg.data_root) if cfg.data_root else default_class_names(ckpt.spec.n_classes)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    failures = 0
    for path in image_paths:
        try:
            example = load_example(path, 0)
        except (OSError, ImageDecodeError, ValueError) as exc:
            failures += 1
            print(f"error: {path}: {exc}", file=sys.stderr)
            continue
        probs = predict(ckpt.spec, ckpt.params, example.image[None])[0]
        cid = int(np.argmax(probs))
        writer.writerow([path, cid, names[cid], fmt(float(probs[cid]))])
    sys.stdout.flush()
    return 1 if failures else 0


def cmd_report(cfg: RunConfig) -> int:
    from . import svg

    cfg.require("out_dir")
    out = Path(cfg.out_dir)
    done = []
    if (out / "curves.csv").is_file():
        (out / "curves.svg").write_text(svg.curves_chart(read_curves_csv(out / "curves.csv")))
        done.append("curves.svg")
    if (out / "confusion_matrix.csv").is_file():
        (out / "confusion_matrix.svg").write_text(svg.confusion_matrix_chart(read_confusion_matrix_csv(out / "confusion_matrix.csv")))
        done.append("confusion_matrix.svg")
    if (out / "classification_report.csv").is_file():
        rows = read_classification_report_csv(out / "classification_report.csv")["classes"]
        p, r, f = (np.array([rows[c][k] for c in sorted(rows)]) for k in range(3))
        (out / "classification_report.svg").write_text(svg.report_chart(p, r, f))
        done.append("classification_report.svg")
    if (out / "per_class_accuracy.csv").is_file():
        acc, _ = read_per_class_accuracy_csv(out / "per_class_accuracy.csv")
        (out / "per_class_accuracy.svg").write_text(svg.bar_chart(acc, "Class-wise accuracy", "accuracy"))
        done.append("per_class_accuracy.svg")
    if not done:
        raise DatasetError(f"no report inputs (curves.csv, confusion_matrix.csv, ...) found in {out}")
    log.info("regenerated %s", ", ".join(done))
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--data-root", dest="data_root")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--checkpoint")
    p.add_argument("--seed", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--epochs", dest="max_epochs", type=int)
    p.add_argument("--lr", dest="learning_rate", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsrnet", description="Traffic-sign CNN: train, eval, predict, report")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("train", "train on a directory-per-class dataset"),
        ("eval", "evaluate a checkpoint on the held-out test split"),
        ("predict", "classify individual images"),
        ("report", "regenerate SVG charts from existing CSV outputs"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "predict":
            p.add_argument("images", nargs="+")
    return parser


def _thread_limit():
    raw = os.environ.get("TSR_THREADS", "").strip()
    if not raw or raw == "0":
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(raw))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    overrides = {k: getattr(args, k) for k in
                 ("data_root", "out_dir", "checkpoint", "seed", "batch_size", "max_epochs", "learning_rate")}
    try:
        cfg = parse_config(args.config, overrides)
        with _thread_limit():
            if args.command == "train":
                return cmd_train(cfg)
            if args.command == "eval":
                return cmd_eval(cfg)
            if args.command == "predict":
                return cmd_predict(cfg, args.images)
            return cmd_report(cfg)
    except _EXPECTED_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
