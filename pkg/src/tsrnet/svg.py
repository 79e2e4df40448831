"""Self-contained SVG 1.1 charts with deterministic element order."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 720, 360
MARGIN = 50
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c")


def _doc(body: list[str], width: int = WIDTH, height: int = HEIGHT) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">\n'
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def _n(x: float) -> str:
    return f"{x:.2f}"


def _title(text: str, width: int = WIDTH) -> str:
    return f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(text)}</text>'


def _axes(x0, y0, w, h, ymin, ymax, ylabel) -> list[str]:
    parts = [f'<rect x="{_n(x0)}" y="{_n(y0)}" width="{_n(w)}" height="{_n(h)}" fill="none" stroke="black"/>']
    for k in range(5):
        frac = k / 4
        y = y0 + h - frac * h
        val = ymin + frac * (ymax - ymin)
        parts.append(f'<line x1="{_n(x0 - 4)}" y1="{_n(y)}" x2="{_n(x0)}" y2="{_n(y)}" stroke="black"/>')
        parts.append(f'<text x="{_n(x0 - 6)}" y="{_n(y + 4)}" text-anchor="end">{val:.2f}</text>')
    parts.append(
        f'<text x="12" y="{_n(y0 + h / 2)}" transform="rotate(-90 12 {_n(y0 + h / 2)})" '
        f'text-anchor="middle">{escape(ylabel)}</text>'
    )
    return parts


def bar_chart(values, title: str, ylabel: str) -> str:
    values = np.asarray(values, dtype=np.float64)
    x0, y0 = MARGIN, 35
    w, h = WIDTH - MARGIN - 15, HEIGHT - 35 - 40
    body = [_title(title)] + _axes(x0, y0, w, h, 0.0, 1.0, ylabel)
    n = max(len(values), 1)
    slot = w / n
    for i, v in enumerate(values):
        bh = min(max(v, 0.0), 1.0) * h
        body.append(
            f'<rect x="{_n(x0 + i * slot + slot * 0.1)}" y="{_n(y0 + h - bh)}" '
            f'width="{_n(slot * 0.8)}" height="{_n(bh)}" fill="{PALETTE[0]}"/>'
        )
        body.append(f'<text x="{_n(x0 + (i + 0.5) * slot)}" y="{_n(y0 + h + 14)}" '
                    f'text-anchor="middle" font-size="8">{i}</text>')
    return _doc(body)


def report_chart(precision, recall, f1) -> str:
    series = [("precision", precision), ("recall", recall), ("f1", f1)]
    x0, y0 = MARGIN, 35
    w, h = WIDTH - MARGIN - 15, HEIGHT - 35 - 55
    body = [_title("Classification report")] + _axes(x0, y0, w, h, 0.0, 1.0, "score")
    n = max(len(precision), 1)
    slot = w / n
    bw = slot * 0.8 / 3
    for i in range(len(precision)):
        for k, (_, vals) in enumerate(series):
            bh = min(max(float(vals[i]), 0.0), 1.0) * h
            body.append(
                f'<rect x="{_n(x0 + i * slot + slot * 0.1 + k * bw)}" y="{_n(y0 + h - bh)}" '
                f'width="{_n(bw)}" height="{_n(bh)}" fill="{PALETTE[k]}"/>'
            )
        body.append(f'<text x="{_n(x0 + (i + 0.5) * slot)}" y="{_n(y0 + h + 14)}" '
                    f'text-anchor="middle" font-size="8">{i}</text>')
    body += _legend([name for name, _ in series], x0, HEIGHT - 15)
    return _doc(body)


def _legend(names, x, y) -> list[str]:
    parts = []
    for k, name in enumerate(names):
        parts.append(f'<rect x="{_n(x + k * 110)}" y="{_n(y - 9)}" width="10" height="10" fill="{PALETTE[k]}"/>')
        parts.append(f'<text x="{_n(x + k * 110 + 14)}" y="{_n(y)}">{escape(name)}</text>')
    return parts


def confusion_matrix_chart(cm) -> str:
    cm = np.asarray(cm)
    n = cm.shape[0]
    size = 640
    cell = (size - 60) / n
    row_max = cm.max(axis=1, keepdims=True).astype(np.float64)
    shade = np.divide(cm, row_max, out=np.zeros(cm.shape), where=row_max > 0)
    body = [_title("Confusion matrix (rows: true, columns: predicted)", size)]
    for t in range(n):
        for p in range(n):
            level = int(round(255 * (1.0 - shade[t, p])))
            body.append(
                f'<rect x="{_n(50 + p * cell)}" y="{_n(40 + t * cell)}" width="{_n(cell)}" height="{_n(cell)}" '
                f'fill="rgb({level},{level},255)"><title>{t}-&gt;{p}: {int(cm[t, p])}</title></rect>'
            )
    return _doc(body, size, size)


def curves_chart(curves) -> str:
    """Loss (left panel) and accuracy (right panel) per epoch, train and validation."""
    body = [_title("Training and validation curves")]
    panel_w = (WIDTH - 3 * MARGIN) / 2
    y0, h = 40, HEIGHT - 40 - 45
    epochs = [c.epoch for c in curves]
    panels = [
        ("loss", [c.train_loss for c in curves], [c.val_loss for c in curves]),
        ("accuracy", [c.train_acc for c in curves], [c.val_acc for c in curves]),
    ]
    for k, (label, train, val) in enumerate(panels):
        x0 = MARGIN + k * (panel_w + MARGIN)
        ymax = max([1.0] + train + val) if label == "loss" else 1.0
        body += _axes(x0, y0, panel_w, h, 0.0, ymax, label)
        if len(epochs) > 0:
            e0, e1 = epochs[0], max(epochs[-1], epochs[0] + 1)
            for s, series in enumerate((train, val)):
                pts = " ".join(
                    f"{_n(x0 + (e - e0) / (e1 - e0) * panel_w)},{_n(y0 + h - v / ymax * h)}"
                    for e, v in zip(epochs, series)
                )
                body.append(f'<polyline points="{pts}" fill="none" stroke="{PALETTE[s]}" stroke-width="1.5"/>')
        body.append(f'<text x="{_n(x0 + panel_w / 2)}" y="{_n(y0 + h + 16)}" text-anchor="middle">epoch</text>')
    body += _legend(["train", "validation"], MARGIN, HEIGHT - 8)
    return _doc(body)
