"""SVG renderer: structural checks and a committed golden file."""

import os
import re

import numpy as np
import pytest

from evc.curves import EventCurve, EventTimeline
from evc.errors import InvalidData, ShapeError
from evc.plotting import emit_plot, save_curve_figure, save_envelope_figure

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
GOLDEN = os.path.join(DATA_DIR, "golden_curve.svg")


def golden_inputs():
    """Fixed inputs behind tests/data/golden_curve.svg. Do not change them
    without regenerating the file."""
    rng = np.random.default_rng(2026)
    curves = [
        EventCurve(values=np.sin(np.linspace(0.0, 6.0, 50)) + 0.1 * rng.standard_normal(50),
                   duration_s=4.0),
        EventCurve(values=np.cos(np.linspace(0.0, 6.0, 50)), duration_s=4.0),
    ]
    events = EventTimeline(times_s=np.array([0.5, 2.5]), span_s=4.0, label="cut")
    return curves, events


def test_golden_svg_is_reproduced_bit_for_bit(tmp_path):
    curves, events = golden_inputs()
    svg = emit_plot(curves, events, tmp_path / "out.svg")
    with open(GOLDEN) as fh:
        assert svg == fh.read()


def test_svg_structure(tmp_path):
    rng = np.random.default_rng(3)
    curves = [
        EventCurve(values=rng.standard_normal(33), duration_s=2.0) for _ in range(3)
    ]
    events = EventTimeline(times_s=np.array([0.25, 1.0, 1.75]), span_s=2.0)
    path = tmp_path / "plot.svg"
    svg = emit_plot(curves, events, path)
    assert svg.startswith('<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 960 320">')
    assert svg.rstrip().endswith("</svg>")
    with open(path) as fh:
        assert fh.read() == svg

    polylines = re.findall(r'<polyline class="c(\d)" points="([^"]*)"', svg)
    assert [int(i) for i, _ in polylines] == [0, 1, 2]
    for _, pts in polylines:
        assert len(pts.split()) == 33
    # one dashed vertical marker per event
    assert svg.count('<line class="ev"') == 3
    # each curve gets its own stroke color in the style block
    styles = re.findall(r"\.c(\d)\{stroke:(#[0-9a-f]{6})", svg)
    colors = [c for _, c in styles]
    assert len(colors) == 3 and len(set(colors)) == 3


def test_svg_determinism(tmp_path):
    curves, events = golden_inputs()
    a = emit_plot(curves, events, tmp_path / "a.svg")
    b = emit_plot(curves, events, tmp_path / "b.svg")
    assert a == b


def test_flat_curve_renders(tmp_path):
    flat = EventCurve(values=np.full(10, 2.0), duration_s=1.0)
    svg = emit_plot([flat], None, tmp_path / "flat.svg")
    assert '<polyline class="c0"' in svg


def test_emit_plot_validation(tmp_path):
    a = EventCurve(values=np.zeros(5), duration_s=1.0)
    b = EventCurve(values=np.zeros(5), duration_s=2.0)
    with pytest.raises(InvalidData):
        emit_plot([], None, tmp_path / "x.svg")
    with pytest.raises(ShapeError):
        emit_plot([a, b], None, tmp_path / "x.svg")
    events = EventTimeline(times_s=np.array([0.5]), span_s=3.0)
    with pytest.raises(ShapeError):
        emit_plot([a], events, tmp_path / "x.svg")


def test_matplotlib_figures_smoke(tmp_path):
    curves, events = golden_inputs()
    fig_path = tmp_path / "report.png"
    save_curve_figure(curves, ["a", "b"], events, fig_path, title="demo")
    with open(fig_path, "rb") as fh:
        assert fh.read(8) == b"\x89PNG\r\n\x1a\n"

    rng = np.random.default_rng(0)
    pairs = [(rng.standard_normal(20), rng.standard_normal(20)) for _ in range(3)]
    env_path = tmp_path / "env.png"
    save_envelope_figure(pairs, [0.5, None, -0.2], env_path)
    with open(env_path, "rb") as fh:
        assert fh.read(8) == b"\x89PNG\r\n\x1a\n"
