"""Curve and event rendering.

`emit_plot` writes a self-contained SVG with a fixed 960x320 viewbox, one
polyline per curve and one vertical marker per event time. The output is a
pure function of its inputs: fixed palette, fixed margins, fixed numeric
formatting, so identical inputs give byte-identical files.

The matplotlib helpers render nicer report figures next to delimited outputs;
they make no determinism promises and are never golden-tested.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .curves import EventCurve, EventTimeline
from .errors import InvalidData, ShapeError

WIDTH = 960
HEIGHT = 320
MARGIN_L = 56
MARGIN_R = 16
MARGIN_T = 16
MARGIN_B = 40

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#17becf")
EVENT_COLOR = "#d62728"


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round tick positions at a 1/2/5 step covering [lo, hi]."""
    span = hi - lo
    if span <= 0.0:
        return [lo]
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if step >= raw:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * span else t)
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def emit_plot(
    curves: Sequence[EventCurve],
    events: EventTimeline | None,
    path,
) -> str:
    """Write the SVG to path and return it as a string."""
    if len(curves) == 0:
        raise InvalidData("emit_plot needs at least one curve")
    duration = curves[0].duration_s
    for i, c in enumerate(curves[1:], start=1):
        if c.duration_s != duration:
            raise ShapeError(
                f"curve {i} duration {c.duration_s} != curve 0 duration {duration}"
            )
    if events is not None and events.span_s != duration:
        raise ShapeError(
            f"event span {events.span_s} != curve duration {duration}"
        )

    ymin = min(float(c.values.min()) for c in curves)
    ymax = max(float(c.values.max()) for c in curves)
    if ymin == ymax:
        ymin, ymax = ymin - 1.0, ymax + 1.0
    pad = 0.05 * (ymax - ymin)
    ymin, ymax = ymin - pad, ymax + pad

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(t: float) -> float:
        return MARGIN_L + (t / duration) * plot_w

    def sy(v: float) -> float:
        return MARGIN_T + (ymax - v) / (ymax - ymin) * plot_h

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}">',
        "<style>",
        "text{font-family:sans-serif;font-size:11px;fill:#333}",
        ".axis{stroke:#333;stroke-width:1;fill:none}",
        ".grid{stroke:#ddd;stroke-width:1}",
        f".ev{{stroke:{EVENT_COLOR};stroke-width:1;stroke-dasharray:4 3}}",
    ]
    for i in range(len(curves)):
        color = PALETTE[i % len(PALETTE)]
        lines.append(f".c{i}{{stroke:{color};stroke-width:1.5;fill:none}}")
    lines.append("</style>")
    lines.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>')

    xticks = _nice_ticks(0.0, duration)
    yticks = _nice_ticks(ymin, ymax)
    for t in xticks:
        x = _fmt(sx(t))
        lines.append(
            f'<line class="grid" x1="{x}" y1="{_fmt(MARGIN_T)}" x2="{x}" '
            f'y2="{_fmt(MARGIN_T + plot_h)}"/>'
        )
        lines.append(
            f'<text x="{x}" y="{_fmt(MARGIN_T + plot_h + 14)}" '
            f'text-anchor="middle">{t:.6g}</text>'
        )
    for v in yticks:
        y = _fmt(sy(v))
        lines.append(
            f'<line class="grid" x1="{_fmt(MARGIN_L)}" y1="{y}" '
            f'x2="{_fmt(MARGIN_L + plot_w)}" y2="{y}"/>'
        )
        lines.append(
            f'<text x="{_fmt(MARGIN_L - 6)}" y="{y}" text-anchor="end" '
            f'dominant-baseline="middle">{v:.6g}</text>'
        )

    if events is not None:
        for t in events.times_s:
            x = _fmt(sx(float(t)))
            lines.append(
                f'<line class="ev" x1="{x}" y1="{_fmt(MARGIN_T)}" x2="{x}" '
                f'y2="{_fmt(MARGIN_T + plot_h)}"/>'
            )

    for i, c in enumerate(curves):
        times = c.times()
        pts = " ".join(
            f"{_fmt(sx(float(t)))},{_fmt(sy(float(v)))}"
            for t, v in zip(times, c.values)
        )
        lines.append(f'<polyline class="c{i}" points="{pts}"/>')

    lines.append(
        f'<rect class="axis" x="{_fmt(MARGIN_L)}" y="{_fmt(MARGIN_T)}" '
        f'width="{_fmt(plot_w)}" height="{_fmt(plot_h)}"/>'
    )
    lines.append(
        f'<text x="{_fmt(MARGIN_L + plot_w / 2)}" y="{_fmt(HEIGHT - 8)}" '
        f'text-anchor="middle">time (s)</text>'
    )
    lines.append("</svg>")
    svg = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(svg)
    return svg


# --- matplotlib report figures (non-contractual niceties) ---

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_curve_figure(
    curves: Sequence[EventCurve],
    labels: Sequence[str],
    events: EventTimeline | None,
    path,
    title: str = "",
) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(10, 3.5))
    for curve, label in zip(curves, labels):
        ax.plot(curve.times(), curve.values, label=label, linewidth=1.2)
    if events is not None:
        for t in events.times_s:
            ax.axvline(float(t), color="crimson", linestyle="--", linewidth=0.8, alpha=0.7)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("value")
    if title:
        ax.set_title(title)
    if labels and any(labels):
        ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_envelope_figure(
    pairs: Sequence[tuple[np.ndarray, np.ndarray]],
    correlations: Sequence[float | None],
    path,
) -> None:
    """Grid of (curve, envelope) overlays, both standardized, one panel per item."""
    plt = _pyplot()
    count = min(len(pairs), 8)
    cols = 4
    rows = max(1, (count + cols - 1) // cols)
    fig, axes = plt.subplots(rows, cols, figsize=(12, 2.6 * rows), squeeze=False)
    for k in range(rows * cols):
        ax = axes[k // cols][k % cols]
        if k >= count:
            ax.axis("off")
            continue
        curve, env = pairs[k]
        ax.plot(curve, linewidth=1.0, label="curve")
        ax.plot(env, linewidth=1.0, label="envelope")
        r = correlations[k]
        ax.set_title("skipped" if r is None else f"r={r:.3f}", fontsize=8)
        ax.tick_params(labelsize=7)
        if k == 0:
            ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
