"""SVG rendering of a distance-dissimilarity regression curve.

The plot shows the training points, the predictive mean, and shaded bands at
2, 3 and 5 predictive standard deviations. The SVG is built element by
element (no plotting library) so its structure is stable: exactly three
``polygon`` elements, one per band, each tagged with a ``data-band``
attribute, drawn widest first so narrower bands sit on top.
"""

from __future__ import annotations

import os
import tempfile
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np

from .dissimilarity import DissimilarityDataset
from .gp import GpModel, predict_many

BAND_SIGMAS = (5.0, 3.0, 2.0)
_BAND_COLORS = {5.0: "#ffe3bb", 3.0: "#ffc470", 2.0: "#f59b2d"}
_MARGIN_LEFT = 70.0
_MARGIN_RIGHT = 20.0
_MARGIN_TOP = 20.0
_MARGIN_BOTTOM = 55.0


def _f(value: float) -> str:
    return repr(float(value))


class _AxesMapper:
    def __init__(self, width, height, x_lo, x_hi, y_lo, y_hi):
        self.px0 = _MARGIN_LEFT
        self.px1 = width - _MARGIN_RIGHT
        self.py0 = height - _MARGIN_BOTTOM
        self.py1 = _MARGIN_TOP
        self.x_lo, self.x_hi = x_lo, x_hi
        self.y_lo, self.y_hi = y_lo, y_hi

    def x(self, v: float) -> float:
        span = self.x_hi - self.x_lo
        return self.px0 + (v - self.x_lo) / span * (self.px1 - self.px0)

    def y(self, v: float) -> float:
        span = self.y_hi - self.y_lo
        return self.py0 + (v - self.y_lo) / span * (self.py1 - self.py0)


def _polyline_points(xs, ys) -> str:
    return " ".join(f"{_f(x)},{_f(y)}" for x, y in zip(xs, ys))


def emit_distance_dissimilarity_plot(
    model: GpModel,
    dataset: DissimilarityDataset,
    out_path: str | Path,
    curve_samples: int = 240,
    width: float = 820.0,
    height: float = 560.0,
) -> Path:
    """Write the regression plot as an SVG file and return its path."""
    if len(dataset) == 0:
        raise ValueError("dataset must not be empty")
    if curve_samples < 200:
        raise ValueError(f"need at least 200 curve samples, got {curve_samples}")

    train_s = dataset.dissimilarities
    train_d = dataset.distances_nm
    s_hi = float(max(train_s.max(), model.train_s.max())) * 1.05
    if s_hi <= 0.0:
        s_hi = 1.0
    s_grid = np.linspace(0.0, s_hi, curve_samples)
    mean, std = predict_many(model, s_grid)

    widest = BAND_SIGMAS[0]
    y_lo = float(min((mean - widest * std).min(), train_d.min()))
    y_hi = float(max((mean + widest * std).max(), train_d.max()))
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    mapper = _AxesMapper(width, height, 0.0, s_hi, y_lo - pad, y_hi + pad)

    svg = ET.Element(
        "svg",
        xmlns="http://www.w3.org/2000/svg",
        width=_f(width),
        height=_f(height),
        viewBox=f"0 0 {_f(width)} {_f(height)}",
    )
    ET.SubElement(svg, "rect", x="0", y="0", width=_f(width), height=_f(height), fill="white")

    xs_px = [mapper.x(s) for s in s_grid]
    for k in BAND_SIGMAS:
        upper = [mapper.y(m + k * sd) for m, sd in zip(mean, std)]
        lower = [mapper.y(m - k * sd) for m, sd in zip(mean, std)]
        points = _polyline_points(xs_px, upper) + " " + _polyline_points(
            xs_px[::-1], lower[::-1]
        )
        ET.SubElement(
            svg,
            "polygon",
            points=points,
            fill=_BAND_COLORS[k],
            stroke="none",
            attrib={"data-band": f"{k:g}sigma"},
        )

    mean_px = [mapper.y(m) for m in mean]
    ET.SubElement(
        svg,
        "polyline",
        points=_polyline_points(xs_px, mean_px),
        fill="none",
        stroke="#8a4500",
        attrib={"stroke-width": "2.5", "data-role": "mean"},
    )

    for s, d in zip(train_s, train_d):
        ET.SubElement(
            svg,
            "circle",
            cx=_f(mapper.x(s)),
            cy=_f(mapper.y(d)),
            r="2.2",
            fill="#c22",
            attrib={"data-role": "train"},
        )

    # Axes and ticks.
    axis_attrib = {"stroke": "#222", "stroke-width": "1"}
    ET.SubElement(
        svg, "line",
        x1=_f(mapper.px0), y1=_f(mapper.py0), x2=_f(mapper.px1), y2=_f(mapper.py0),
        attrib=axis_attrib,
    )
    ET.SubElement(
        svg, "line",
        x1=_f(mapper.px0), y1=_f(mapper.py0), x2=_f(mapper.px0), y2=_f(mapper.py1),
        attrib=axis_attrib,
    )
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        sv = frac * s_hi
        xp = mapper.x(sv)
        ET.SubElement(
            svg, "line", x1=_f(xp), y1=_f(mapper.py0), x2=_f(xp), y2=_f(mapper.py0 + 5),
            attrib=axis_attrib,
        )
        tick = ET.SubElement(
            svg, "text", x=_f(xp), y=_f(mapper.py0 + 20),
            attrib={"text-anchor": "middle", "font-size": "12"},
        )
        tick.text = f"{sv:.4g}"
        dv = mapper.y_lo + frac * (mapper.y_hi - mapper.y_lo)
        yp = mapper.y(dv)
        ET.SubElement(
            svg, "line", x1=_f(mapper.px0 - 5), y1=_f(yp), x2=_f(mapper.px0), y2=_f(yp),
            attrib=axis_attrib,
        )
        tick = ET.SubElement(
            svg, "text", x=_f(mapper.px0 - 9), y=_f(yp + 4),
            attrib={"text-anchor": "end", "font-size": "12"},
        )
        tick.text = f"{dv:.4g}"

    x_label = ET.SubElement(
        svg, "text", x=_f((mapper.px0 + mapper.px1) / 2), y=_f(height - 12),
        attrib={"text-anchor": "middle", "font-size": "14"},
    )
    x_label.text = "dissimilarity S (SDI, normalized intensity)"
    y_label = ET.SubElement(
        svg, "text", x="18", y=_f((mapper.py0 + mapper.py1) / 2),
        attrib={
            "text-anchor": "middle",
            "font-size": "14",
            "transform": f"rotate(-90 18 {_f((mapper.py0 + mapper.py1) / 2)})",
        },
    )
    y_label.text = "distance D (nm)"

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    payload = ET.tostring(svg, encoding="unicode")
    fd, tmp = tempfile.mkstemp(dir=out_path.parent, prefix=out_path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write('<?xml version="1.0" encoding="UTF-8"?>\n')
            fh.write(payload)
            fh.write("\n")
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return out_path
