"""Deterministic SVG rendering: top-down scene views with a camera-eye
marker, and simple line/histogram charts for reports.

Everything is a pure function of its inputs; byte-identical output for
identical arguments, so golden-file tests stay stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .scene import AttributeVocab, COORD_HI, COORD_LO, DEFAULT_VOCAB, SceneGraph

CANVAS = 360.0
MARGIN = 30.0

DEFAULT_PALETTE = {
    "gray": "#9e9e9e",
    "red": "#d32f2f",
    "blue": "#1e6fd3",
    "green": "#2e9e4f",
    "brown": "#8d5a2b",
    "purple": "#8e44ad",
    "cyan": "#2ab5c8",
    "yellow": "#e8c020",
}

SHAPE_GLYPHS = {"cube": "square", "sphere": "circle", "cylinder": "rounded"}


@dataclass(frozen=True)
class VizStyle:
    palette: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_PALETTE))
    glyphs: dict[str, str] = field(default_factory=lambda: dict(SHAPE_GLYPHS))
    radius_by_size: dict[str, float] = field(
        default_factory=lambda: {"small": 9.0, "large": 16.0}
    )
    # fractional canvas position of the camera-eye marker (bottom right)
    eye_position: tuple[float, float] = (0.94, 0.94)


DEFAULT_STYLE = VizStyle()


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def _to_canvas(x: float, y: float) -> tuple[float, float]:
    # +y is "behind": render it toward the top of the image
    scale = (CANVAS - 2 * MARGIN) / (COORD_HI - COORD_LO)
    cx = MARGIN + (x - COORD_LO) * scale
    cy = CANVAS - MARGIN - (y - COORD_LO) * scale
    return cx, cy


def _check_style(scene: SceneGraph, style: VizStyle, vocab: AttributeVocab) -> None:
    missing = sorted(
        {vocab.colors[o.color] for o in scene.objects} - set(style.palette)
    )
    if missing:
        raise ValueError(f"palette missing colors: {missing}")
    missing_shapes = sorted(
        {vocab.shapes[o.shape] for o in scene.objects} - set(style.glyphs)
    )
    if missing_shapes:
        raise ValueError(f"glyph table missing shapes: {missing_shapes}")


def render_topdown(
    scene: SceneGraph,
    style: VizStyle = DEFAULT_STYLE,
    vocab: AttributeVocab = DEFAULT_VOCAB,
) -> str:
    """One glyph per object; fill from the palette, dashed stroke for rubber,
    solid for metal, plus the camera-eye marker."""
    _check_style(scene, style, vocab)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(CANVAS)}" '
        f'height="{int(CANVAS)}" viewBox="0 0 {int(CANVAS)} {int(CANVAS)}">',
        f'<rect x="0" y="0" width="{int(CANVAS)}" height="{int(CANVAS)}" '
        'fill="#fafafa" stroke="#444" stroke-width="1"/>',
    ]
    for obj in scene.objects:
        cx, cy = _to_canvas(obj.x, obj.y)
        fill = style.palette[vocab.colors[obj.color]]
        r = style.radius_by_size[vocab.sizes[obj.size]]
        material = vocab.materials[obj.material]
        dash = ' stroke-dasharray="3 2"' if material == "rubber" else ""
        glyph = style.glyphs[vocab.shapes[obj.shape]]
        common = f'fill="{fill}" stroke="#222" stroke-width="1.5"{dash} class="object"'
        if glyph == "circle":
            parts.append(
                f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" {common}/>'
            )
        else:
            rx = ' rx="5"' if glyph == "rounded" else ""
            parts.append(
                f'<rect x="{_fmt(cx - r)}" y="{_fmt(cy - r)}" width="{_fmt(2 * r)}" '
                f'height="{_fmt(2 * r)}"{rx} {common}/>'
            )
        parts.append(
            f'<text x="{_fmt(cx)}" y="{_fmt(cy + 3)}" font-size="8" '
            f'text-anchor="middle" fill="#fff">{obj.id}</text>'
        )
    ex, ey = style.eye_position[0] * CANVAS, style.eye_position[1] * CANVAS
    parts.append(
        f'<g class="camera-eye"><circle cx="{_fmt(ex)}" cy="{_fmt(ey)}" r="8" '
        'fill="#fff" stroke="#000" stroke-width="1.5"/>'
        f'<circle cx="{_fmt(ex)}" cy="{_fmt(ey)}" r="3" fill="#000"/></g>'
    )
    parts.append("</svg>")
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# Charts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Series:
    label: str
    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.xs) != len(self.ys):
            raise ValueError(f"series {self.label!r}: {len(self.xs)} xs vs {len(self.ys)} ys")
        if not self.xs:
            raise ValueError(f"series {self.label!r} is empty")


CHART_W, CHART_H = 480.0, 300.0
PLOT = (55.0, 20.0, 460.0, 260.0)  # x0 y0 x1 y1
SERIES_COLORS = ("#1e6fd3", "#d32f2f", "#2e9e4f", "#8e44ad", "#e8c020")


def _chart_scale(series: Sequence[Series]):
    xs = [x for s in series for x in s.xs]
    ys = [y for s in series for y in s.ys]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    x0, y0, x1, y1 = PLOT

    def to_px(x: float, y: float) -> tuple[float, float]:
        px = x0 + (x - x_lo) * (x1 - x0) / (x_hi - x_lo)
        py = y1 - (y - y_lo) * (y1 - y0) / (y_hi - y_lo)
        return px, py

    return to_px, (x_lo, x_hi, y_lo, y_hi)


def _metadata(series: Sequence[Series]) -> str:
    import json

    data = [{"label": s.label, "xs": list(s.xs), "ys": list(s.ys)} for s in series]
    return f"<metadata>{json.dumps(data, sort_keys=True)}</metadata>"


def render_chart(series: Sequence[Series], kind: str = "line") -> str:
    """Static line or histogram chart; the data table rides along as SVG
    metadata so reports stay auditable."""
    if kind not in ("line", "histogram"):
        raise ValueError(f"unknown chart kind {kind!r}")
    if not series:
        raise ValueError("no series")
    to_px, (x_lo, x_hi, y_lo, y_hi) = _chart_scale(series)
    x0, y0, x1, y1 = PLOT
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(CHART_W)}" '
        f'height="{int(CHART_H)}" viewBox="0 0 {int(CHART_W)} {int(CHART_H)}">',
        _metadata(series),
        f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(x1 - x0)}" '
        f'height="{_fmt(y1 - y0)}" fill="#fff" stroke="#444" stroke-width="1"/>',
        f'<text x="{_fmt(x0 - 6)}" y="{_fmt(y1 + 4)}" font-size="10" '
        f'text-anchor="end">{_fmt(y_lo)}</text>',
        f'<text x="{_fmt(x0 - 6)}" y="{_fmt(y0 + 4)}" font-size="10" '
        f'text-anchor="end">{_fmt(y_hi)}</text>',
        f'<text x="{_fmt(x0)}" y="{_fmt(y1 + 16)}" font-size="10" '
        f'text-anchor="middle">{_fmt(x_lo)}</text>',
        f'<text x="{_fmt(x1)}" y="{_fmt(y1 + 16)}" font-size="10" '
        f'text-anchor="middle">{_fmt(x_hi)}</text>',
    ]
    for i, s in enumerate(series):
        color = SERIES_COLORS[i % len(SERIES_COLORS)]
        pts = [to_px(x, y) for x, y in zip(s.xs, s.ys)]
        if kind == "line":
            if len(pts) > 1:
                path = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in pts)
                parts.append(
                    f'<polyline points="{path}" fill="none" stroke="{color}" '
                    'stroke-width="1.5"/>'
                )
            for px, py in pts:
                parts.append(
                    f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="2.5" '
                    f'fill="{color}" class="marker"/>'
                )
        else:
            # bar per (x, y) point, width split evenly across the x range
            bar_w = (x1 - x0) / max(len(pts), 1) * 0.8
            base = to_px(0.0, max(y_lo, 0.0))[1]
            for px, py in pts:
                parts.append(
                    f'<rect x="{_fmt(px - bar_w / 2)}" y="{_fmt(py)}" '
                    f'width="{_fmt(bar_w)}" height="{_fmt(max(base - py, 0.0))}" '
                    f'fill="{color}" fill-opacity="0.7" class="bar"/>'
                )
        parts.append(
            f'<text x="{_fmt(x1 - 4)}" y="{_fmt(y0 + 14 + 12 * i)}" font-size="10" '
            f'text-anchor="end" fill="{color}">{s.label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
