import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsrnet.metrics import (CurvePoint, ReportFormatError, accuracy, classification_report, confusion_matrix,
                            per_class_accuracy, read_classification_report_csv, read_confusion_matrix_csv,
                            read_curves_csv, read_per_class_accuracy_csv, render_reports)


def test_accuracy():
    assert accuracy([1, 2, 3], [1, 2, 3]) == 1.0
    assert accuracy([0, 0], [1, 1]) == 0.0
    assert accuracy([1, 2, 3, 4], [1, 2, 3, 0]) == 0.75
    with pytest.raises(ValueError):
        accuracy([1], [1, 2])
    with pytest.raises(ValueError):
        accuracy([], [])


def test_confusion_matrix():
    cm = confusion_matrix([0, 1, 2], [0, 1, 2])
    assert cm.shape == (43, 43) and np.array_equal(cm, np.diag(np.diag(cm))) and cm.trace() == 3
    cm = confusion_matrix([0, 1, 1], [0, 0, 1])
    assert (cm[0, 0], cm[0, 1], cm[1, 1], cm.sum()) == (1, 1, 1, 3)
    with pytest.raises(ValueError):
        confusion_matrix([43], [0])


@settings(max_examples=50)
@given(st.lists(st.tuples(st.integers(0, 42), st.integers(0, 42)), min_size=1, max_size=300))
def test_trace_over_total_is_accuracy(pairs):
    preds, truths = zip(*pairs)
    cm = confusion_matrix(preds, truths)
    assert cm.sum() == len(pairs)
    assert np.array_equal(cm.sum(axis=1), np.bincount(truths, minlength=43))
    assert cm.trace() / cm.sum() == accuracy(preds, truths)


def test_report_diagonal():
    report = classification_report(np.diag([3, 4, 5]))
    assert np.all(report.precision == 1) and np.all(report.recall == 1) and np.all(report.f1 == 1)
    assert report.accuracy == 1.0 and report.undefined == []


def test_report_tp2_fp1_fn1():
    # class 0: TP=2, FN=1 (predicted 1), FP=1 (a class-2 example predicted 0)
    cm = np.array([[2, 1, 0], [0, 3, 0], [1, 0, 3]])
    report = classification_report(cm)
    assert report.precision[0] == pytest.approx(2 / 3)
    assert report.recall[0] == pytest.approx(2 / 3)
    assert report.f1[0] == pytest.approx(2 / 3)


def test_report_zero_support_is_zero_not_nan():
    cm = np.array([[2, 0, 0], [0, 0, 0], [0, 1, 1]])
    report = classification_report(cm)
    assert report.recall[1] == 0 and report.precision[1] == 0 and report.f1[1] == 0
    assert not np.any(np.isnan(report.f1))
    assert report.undefined == [1]
    assert report.support.tolist() == [2, 0, 2]


def test_macro_average_ignores_unseen_classes():
    cm = np.zeros((43, 43), dtype=int)
    cm[0, 0], cm[1, 1] = 4, 2
    report = classification_report(cm)
    assert report.macro == (1.0, 1.0, 1.0)
    assert report.weighted == (1.0, 1.0, 1.0)


def test_per_class_accuracy():
    assert per_class_accuracy(np.diag([1, 2])).tolist() == [1, 1]
    assert per_class_accuracy(np.array([[3, 1], [0, 0]])).tolist() == [0.75, 0]


@settings(max_examples=30)
@given(st.lists(st.integers(0, 20), min_size=25, max_size=25))
def test_recall_equals_per_class_accuracy(values):
    cm = np.array(values).reshape(5, 5)
    report = classification_report(cm)
    assert np.array_equal(report.recall, per_class_accuracy(cm))
    assert 0 <= report.macro[2] <= 1
    assert report.support.sum() == cm.sum()


def curves_fixture():
    return [CurvePoint(1, 2.5, 0.4, 2.6, 0.35, 0.001), CurvePoint(2, 1.1234567, 0.8, 1.3, 0.75, 0.0005)]


def test_render_reports_layout_and_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    truths = rng.integers(0, 43, 500)
    preds = np.where(rng.random(500) < 0.8, truths, rng.integers(0, 43, 500))
    cm = confusion_matrix(preds, truths)
    report = classification_report(cm)
    written = render_reports(cm, report, curves_fixture(), tmp_path)
    names = sorted(p.name for p in written)
    assert names == sorted(["confusion_matrix.csv", "classification_report.csv", "per_class_accuracy.csv",
                            "curves.csv", "confusion_matrix.svg", "classification_report.svg",
                            "per_class_accuracy.svg", "curves.svg"])
    rows = (tmp_path / "confusion_matrix.csv").read_text().splitlines()
    assert len(rows) == 44 and all(len(r.split(",")) == 44 for r in rows)
    assert np.array_equal(read_confusion_matrix_csv(tmp_path / "confusion_matrix.csv"), cm)
    parsed = read_classification_report_csv(tmp_path / "classification_report.csv")
    for c in range(43):
        p, r, f, s = parsed["classes"][c]
        assert (p, r, f, s) == (round(report.precision[c], 6), round(report.recall[c], 6),
                                round(report.f1[c], 6), report.support[c])
    assert parsed["accuracy"] == (round(report.accuracy, 6), 500)
    acc, support = read_per_class_accuracy_csv(tmp_path / "per_class_accuracy.csv")
    assert np.array_equal(acc, np.round(per_class_accuracy(cm), 6))
    curves = read_curves_csv(tmp_path / "curves.csv")
    assert curves[1] == CurvePoint(2, 1.123457, 0.8, 1.3, 0.75, 0.0005)


def test_render_reports_deterministic_bytes(tmp_path):
    cm = confusion_matrix([0, 1, 2, 2], [0, 1, 1, 2])
    render_reports(cm, None, curves_fixture(), tmp_path / "a")
    render_reports(cm, None, curves_fixture(), tmp_path / "b")
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_empty_curves_header_only(tmp_path):
    render_reports(None, None, [], tmp_path)
    assert (tmp_path / "curves.csv").read_text() == "epoch,train_loss,train_acc,val_loss,val_acc,lr\n"
    assert (tmp_path / "curves.svg").read_text().startswith("<?xml")


def test_svg_is_self_contained(tmp_path):
    render_reports(confusion_matrix([0], [0]), None, curves_fixture(), tmp_path)
    for svg in tmp_path.glob("*.svg"):
        text = svg.read_text()
        assert 'xmlns="http://www.w3.org/2000/svg"' in text and "href" not in text


def test_malformed_curves_row(tmp_path):
    path = tmp_path / "curves.csv"
    path.write_text("epoch,train_loss,train_acc,val_loss,val_acc,lr\n1,0.5,0.9,0.6,0.8,0.001\n2,oops\n")
    with pytest.raises(ReportFormatError, match="row 3"):
        read_curves_csv(path)


def test_render_reports_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match=str(blocker)):
        render_reports(None, None, [], blocker / "sub")
