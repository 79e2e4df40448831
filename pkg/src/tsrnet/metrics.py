"""Accuracy, confusion matrix, per-class report, curve logs and their CSV files."""
from __future__ import annotations

import csv
import io
import os
from dataclasses import astuple, dataclass
from pathlib import Path

import numpy as np

CURVE_HEADER = ["epoch", "train_loss", "train_acc", "val_loss", "val_acc", "lr"]
REPORT_HEADER = ["class", "precision", "recall", "f1", "support"]


class ReportFormatError(ValueError):
    """A metrics CSV file could not be parsed."""


@dataclass(frozen=True)
class CurvePoint:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    lr: float


@dataclass
class ClassificationReport:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    macro: tuple[float, float, float]
    weighted: tuple[float, float, float]
    undefined: list[int]  # seen classes where a 0/0 ratio was reported as 0

    @property
    def total(self) -> int:
        return int(self.support.sum())


def fmt(x: float) -> str:
    return f"{x:.6f}"


def accuracy(predictions, truths) -> float:
    predictions = np.asarray(predictions)
    truths = np.asarray(truths)
    if predictions.shape != truths.shape:
        raise ValueError(f"length mismatch: {predictions.shape[0]} predictions vs {truths.shape[0]} truths")
    if truths.size == 0:
        raise ValueError("accuracy of an empty evaluation set")
    return int(np.sum(predictions == truths)) / truths.size


def confusion_matrix(predictions, truths, n_classes: int = 43) -> np.ndarray:
    """Counts grid: rows are true classes, columns predicted classes."""
    predictions = np.asarray(predictions, dtype=np.int64)
    truths = np.asarray(truths, dtype=np.int64)
    if predictions.shape != truths.shape:
        raise ValueError("predictions and truths differ in length")
    for name, ids in (("prediction", predictions), ("truth", truths)):
        bad = ids[(ids < 0) | (ids >= n_classes)]
        if bad.size:
            raise ValueError(f"{name} class id {int(bad[0])} outside [0, {n_classes - 1}]")
    flat = np.bincount(truths * n_classes + predictions, minlength=n_classes * n_classes)
    return flat.reshape(n_classes, n_classes)


def _ratio(num: np.ndarray, den: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    undefined = den == 0
    out = np.divide(num, den, out=np.zeros(num.shape, dtype=np.float64), where=~undefined)
    return out, undefined


def classification_report(cm: np.ndarray) -> ClassificationReport:
    cm = np.asarray(cm)
    diag = np.diag(cm).astype(np.float64)
    support = cm.sum(axis=1)
    precision, p_undef = _ratio(diag, cm.sum(axis=0).astype(np.float64))
    recall, r_undef = _ratio(diag, support.astype(np.float64))
    f1, f_undef = _ratio(2 * precision * recall, precision + recall)
    total = int(support.sum())
    acc = float(diag.sum() / total) if total else 0.0
    # classes never seen in truths or predictions do not enter the macro average
    active = (support > 0) | (cm.sum(axis=0) > 0)
    if active.any():
        macro = (float(precision[active].mean()), float(recall[active].mean()), float(f1[active].mean()))
    else:
        macro = (0.0, 0.0, 0.0)
    if total:
        w = support / total
        weighted = (float(w @ precision), float(w @ recall), float(w @ f1))
    else:
        weighted = (0.0, 0.0, 0.0)
    undefined = [int(c) for c in np.flatnonzero(active & (p_undef | r_undef | f_undef))]
    return ClassificationReport(precision, recall, f1, support, acc, macro, weighted, undefined)


def per_class_accuracy(cm: np.ndarray) -> np.ndarray:
    cm = np.asarray(cm)
    acc, _ = _ratio(np.diag(cm).astype(np.float64), cm.sum(axis=1).astype(np.float64))
    return acc


# -- CSV ----------------------------------------------------------------------

def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def confusion_matrix_csv(cm: np.ndarray) -> str:
    n = cm.shape[0]
    rows = [["true\\pred", *range(n)]]
    rows += [[t, *(int(v) for v in cm[t])] for t in range(n)]
    return _csv_text(rows)


def classification_report_csv(report: ClassificationReport) -> str:
    rows = [REPORT_HEADER]
    for c in range(len(report.support)):
        rows.append([c, fmt(report.precision[c]), fmt(report.recall[c]), fmt(report.f1[c]), int(report.support[c])])
    rows.append(["macro_avg", *map(fmt, report.macro), report.total])
    rows.append(["weighted_avg", *map(fmt, report.weighted), report.total])
    rows.append(["accuracy", "", "", fmt(report.accuracy), report.total])
    rows.append(["zero_division", ";".join(map(str, report.undefined)), "", "", ""])
    return _csv_text(rows)


def per_class_accuracy_csv(acc: np.ndarray, support: np.ndarray) -> str:
    rows = [["class", "accuracy", "support"]]
    rows += [[c, fmt(a), int(s)] for c, (a, s) in enumerate(zip(acc, support))]
    return _csv_text(rows)


def curves_csv(curves: list[CurvePoint]) -> str:
    rows = [CURVE_HEADER]
    for p in curves:
        rows.append([p.epoch, *(fmt(v) for v in astuple(p)[1:])])
    return _csv_text(rows)


def _read_rows(path: Path) -> list[list[str]]:
    with open(path, newline="") as fh:
        return [row for row in csv.reader(fh)]


def read_curves_csv(path) -> list[CurvePoint]:
    rows = _read_rows(Path(path))
    if not rows or rows[0] != CURVE_HEADER:
        raise ReportFormatError(f"{path}: expected header {','.join(CURVE_HEADER)}")
    curves = []
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            if len(row) != len(CURVE_HEADER):
                raise ValueError
            curves.append(CurvePoint(int(row[0]), *(float(v) for v in row[1:])))
        except ValueError:
            raise ReportFormatError(f"{path}: malformed row {lineno}: {','.join(row)}") from None
    return curves


def read_confusion_matrix_csv(path) -> np.ndarray:
    rows = _read_rows(Path(path))
    try:
        n = len(rows) - 1
        if n < 1 or len(rows[0]) != n + 1:
            raise ValueError
        cm = np.array([[int(v) for v in row[1:]] for row in rows[1:]], dtype=np.int64)
        if cm.shape != (n, n):
            raise ValueError
    except ValueError:
        raise ReportFormatError(f"{path}: not a square confusion matrix") from None
    return cm


def read_classification_report_csv(path) -> dict:
    """Parse back into {class_id: (p, r, f1, support)} plus the footer rows."""
    rows = _read_rows(Path(path))
    if not rows or rows[0] != REPORT_HEADER:
        raise ReportFormatError(f"{path}: expected header {','.join(REPORT_HEADER)}")
    out: dict = {"classes": {}}
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            key = row[0]
            if key == "zero_division":
                out["zero_division"] = [int(c) for c in row[1].split(";") if c]
            elif key == "accuracy":
                out["accuracy"] = (float(row[3]), int(row[4]))
            elif key in ("macro_avg", "weighted_avg"):
                out[key] = (float(row[1]), float(row[2]), float(row[3]), int(row[4]))
            else:
                out["classes"][int(key)] = (float(row[1]), float(row[2]), float(row[3]), int(row[4]))
        except (ValueError, IndexError):
            raise ReportFormatError(f"{path}: malformed row {lineno}: {','.join(row)}") from None
    return out


def read_per_class_accuracy_csv(path) -> tuple[np.ndarray, np.ndarray]:
    rows = _read_rows(Path(path))
    if not rows or rows[0] != ["class", "accuracy", "support"]:
        raise ReportFormatError(f"{path}: expected header class,accuracy,support")
    try:
        acc = np.array([float(r[1]) for r in rows[1:]])
        support = np.array([int(r[2]) for r in rows[1:]])
    except (ValueError, IndexError):
        raise ReportFormatError(f"{path}: malformed row") from None
    return acc, support


def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def render_reports(cm, report: ClassificationReport | None, curves: list[CurvePoint] | None, out_dir) -> list[Path]:
    """Write the CSV artifacts and their SVG charts; returns the written paths.

    ``cm``/``report`` and ``curves`` may be omitted independently.
    """
    from . import svg

    out = Path(out_dir)
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc.strerror or exc}") from exc
    written = []

    def emit(name, text):
        path = out / name
        _write(path, text)
        written.append(path)

    if cm is not None:
        cm = np.asarray(cm)
        report = report or classification_report(cm)
        acc = per_class_accuracy(cm)
        emit("confusion_matrix.csv", confusion_matrix_csv(cm))
        emit("classification_report.csv", classification_report_csv(report))
        emit("per_class_accuracy.csv", per_class_accuracy_csv(acc, report.support))
        emit("confusion_matrix.svg", svg.confusion_matrix_chart(cm))
        emit("classification_report.svg", svg.report_chart(report.precision, report.recall, report.f1))
        emit("per_class_accuracy.svg", svg.bar_chart(acc, "Class-wise accuracy", "accuracy"))
    if curves is not None:
        emit("curves.csv", curves_csv(curves))
        emit("curves.svg", svg.curves_chart(curves))
    return written

