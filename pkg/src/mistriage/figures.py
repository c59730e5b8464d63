"""Deterministic SVG figure generation.

Figures are assembled as plain strings with fixed ordering, fixed float
formatting and no timestamps, so identical inputs regenerate
byte-identical documents (golden-file friendly).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

PALETTE = ("#4878a8", "#e07b39", "#5ba053", "#b65fc9", "#a94f54")
_FONT = 'font-family="Helvetica,Arial,sans-serif"'


def _header(width: int, height: int, title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" font-size="16" {_FONT}>'
        f"{title}</text>",
    ]


def bar_chart(
    title: str,
    labels: list[str],
    values: list[float],
    value_fmt: str = "{:.1f}",
    width: int = 560,
    height: int = 360,
) -> str:
    """Vertical bars with value annotations."""
    top, bottom, left, right = 48, 56, 40, 20
    plot_w, plot_h = width - left - right, height - top - bottom
    vmax = max(max(values), 1e-9)
    n = len(values)
    slot = plot_w / n
    bar_w = slot * 0.6
    parts = _header(width, height, title)
    for i, (label, value) in enumerate(zip(labels, values)):
        x = left + i * slot + (slot - bar_w) / 2
        h = plot_h * value / vmax
        y = top + plot_h - h
        color = PALETTE[i % len(PALETTE)]
        parts.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" height="{h:.1f}" '
            f'fill="{color}"/>'
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{y - 6:.1f}" text-anchor="middle" '
            f'font-size="12" {_FONT}>{value_fmt.format(value)}</text>'
        )
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{top + plot_h + 18:.1f}" '
            f'text-anchor="middle" font-size="12" {_FONT}>{label}</text>'
        )
    parts.append(
        f'<line x1="{left}" y1="{top + plot_h:.1f}" x2="{width - right}" '
        f'y2="{top + plot_h:.1f}" stroke="#333" stroke-width="1"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def grouped_bar_chart(
    title: str,
    group_labels: list[str],
    series: list[tuple[str, list[float]]],
    value_fmt: str = "{:.2f}",
    width: int = 640,
    height: int = 380,
) -> str:
    """One bar cluster per group, one color per series, legend on top."""
    top, bottom, left, right = 64, 56, 40, 20
    plot_w, plot_h = width - left - right, height - top - bottom
    vmax = max((max(vals) for _, vals in series), default=1e-9)
    vmax = max(vmax, 1e-9)
    n_groups, n_series = len(group_labels), len(series)
    slot = plot_w / n_groups
    bar_w = slot * 0.7 / n_series
    parts = _header(width, height, title)
    for s, (name, _) in enumerate(series):
        lx = left + s * 150
        parts.append(
            f'<rect x="{lx}" y="34" width="12" height="12" fill="{PALETTE[s % len(PALETTE)]}"/>'
        )
        parts.append(f'<text x="{lx + 16}" y="45" font-size="12" {_FONT}>{name}</text>')
    for g, label in enumerate(group_labels):
        base = left + g * slot + slot * 0.15
        for s, (_, vals) in enumerate(series):
            value = vals[g]
            h = plot_h * value / vmax
            x = base + s * bar_w
            y = top + plot_h - h
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" height="{h:.1f}" '
                f'fill="{PALETTE[s % len(PALETTE)]}"/>'
            )
            parts.append(
                f'<text x="{x + bar_w / 2:.1f}" y="{y - 4:.1f}" text-anchor="middle" '
                f'font-size="10" {_FONT}>{value_fmt.format(value)}</text>'
            )
        parts.append(
            f'<text x="{left + g * slot + slot / 2:.1f}" y="{top + plot_h + 18:.1f}" '
            f'text-anchor="middle" font-size="12" {_FONT}>{label}</text>'
        )
    parts.append(
        f'<line x1="{left}" y1="{top + plot_h:.1f}" x2="{width - right}" '
        f'y2="{top + plot_h:.1f}" stroke="#333" stroke-width="1"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def heatmap(
    title: str,
    matrix: np.ndarray,
    row_labels: list[str],
    col_labels: list[str],
    value_fmt: str = "{:.0f}",
    width: int = 520,
    height: int = 440,
) -> str:
    """Grid of cells shaded by magnitude with annotated values.

    Doubles as the confusion-matrix figure (rows true, columns predicted).
    """
    matrix = np.asarray(matrix, dtype=float)
    rows, cols = matrix.shape
    top, left = 72, 130
    cell_w = (width - left - 20) / cols
    cell_h = (height - top - 40) / rows
    vmax = max(matrix.max(), 1e-9)
    parts = _header(width, height, title)
    for j, label in enumerate(col_labels):
        parts.append(
            f'<text x="{left + (j + 0.5) * cell_w:.1f}" y="{top - 10}" '
            f'text-anchor="middle" font-size="12" {_FONT}>{label}</text>'
        )
    for i, label in enumerate(row_labels):
        parts.append(
            f'<text x="{left - 8}" y="{top + (i + 0.5) * cell_h + 4:.1f}" '
            f'text-anchor="end" font-size="12" {_FONT}>{label}</text>'
        )
        for j in range(cols):
            frac = matrix[i, j] / vmax
            # white -> steel blue ramp
            r = int(255 - frac * (255 - 72))
            g = int(255 - frac * (255 - 120))
            b = int(255 - frac * (255 - 168))
            x, y = left + j * cell_w, top + i * cell_h
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{cell_w:.1f}" height="{cell_h:.1f}" '
                f'fill="rgb({r},{g},{b})" stroke="#999" stroke-width="0.5"/>'
            )
            text_color = "#000" if frac < 0.6 else "#fff"
            parts.append(
                f'<text x="{x + cell_w / 2:.1f}" y="{y + cell_h / 2 + 4:.1f}" '
                f'text-anchor="middle" font-size="13" fill="{text_color}" {_FONT}>'
                f"{value_fmt.format(matrix[i, j])}</text>"
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(svg: str, path: str | Path) -> None:
    Path(path).write_text(svg, encoding="utf-8")
