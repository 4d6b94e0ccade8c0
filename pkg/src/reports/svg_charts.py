"""
SVG 图表：箱线图与效应量热力图

直接输出 SVG 1.1 文本，相同输入得到逐字节相同的输出
"""

from typing import List, Sequence
from xml.sax.saxutils import escape

from ..models.analysis_models import BoxplotStats, EffectHeatmap, HeatmapCell

SVG_HEADER = '<?xml version="1.0" encoding="UTF-8" standalone="no"?>'
SVG_NS = "http://www.w3.org/2000/svg"

BOX_WIDTH = 40
BOX_SLOT = 90
PLOT_HEIGHT = 300
MARGIN_LEFT = 80
MARGIN_TOP = 40
MARGIN_BOTTOM = 70

CELL = 64
HEAT_MARGIN = 150

SHADE_OPACITY = "0.35"


def _num(value: float) -> str:
    """固定两位小数（避免 -0.00）"""
    text = f"{value:.2f}"
    return "0.00" if text == "-0.00" else text


def _open(width: float, height: float, title: str) -> List[str]:
    return [
        SVG_HEADER,
        f'<svg xmlns="{SVG_NS}" version="1.1" width="{_num(width)}" height="{_num(height)}" '
        f'viewBox="0 0 {_num(width)} {_num(height)}" font-family="sans-serif" font-size="12">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{_num(width)}" height="{_num(height)}" fill="#ffffff"/>',
    ]


def boxplot_svg(boxplots: Sequence[BoxplotStats], title: str = "", unit: str = "J") -> str:
    """
    Tukey 箱线图（每组一个箱）

    Args:
        boxplots: 各组箱线图统计
        title: 图标题
        unit: 纵轴单位

    Returns:
        SVG 文本
    """
    width = MARGIN_LEFT + BOX_SLOT * max(len(boxplots), 1) + 20
    height = MARGIN_TOP + PLOT_HEIGHT + MARGIN_BOTTOM
    lines = _open(width, height, title)

    low = min((b.whisker_low for b in boxplots), default=0.0)
    high = max((b.whisker_high for b in boxplots), default=1.0)
    if high <= low:
        low, high = low - 1.0, high + 1.0
    pad = (high - low) * 0.05
    low, high = low - pad, high + pad

    def y(value: float) -> float:
        return MARGIN_TOP + PLOT_HEIGHT * (high - value) / (high - low)

    lines.append(f'<text x="{_num(width / 2)}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')
    lines.append(
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" '
        f'y2="{MARGIN_TOP + PLOT_HEIGHT}" stroke="#000000"/>'
    )
    for step in range(5):
        value = low + (high - low) * step / 4
        ty = y(value)
        lines.append(
            f'<line x1="{MARGIN_LEFT - 5}" y1="{_num(ty)}" x2="{MARGIN_LEFT}" y2="{_num(ty)}" stroke="#000000"/>'
        )
        lines.append(
            f'<text x="{MARGIN_LEFT - 8}" y="{_num(ty + 4)}" text-anchor="end">{_num(value)}</text>'
        )
    lines.append(
        f'<text x="16" y="{_num(MARGIN_TOP + PLOT_HEIGHT / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 16 {_num(MARGIN_TOP + PLOT_HEIGHT / 2)})">{escape(unit)}</text>'
    )

    for index, box in enumerate(boxplots):
        cx = MARGIN_LEFT + BOX_SLOT * index + BOX_SLOT / 2
        left = cx - BOX_WIDTH / 2
        lines.append(f'<g class="box" data-label="{escape(box.label)}">')
        lines.append(
            f'<line x1="{_num(cx)}" y1="{_num(y(box.whisker_high))}" x2="{_num(cx)}" '
            f'y2="{_num(y(box.whisker_low))}" stroke="#333333"/>'
        )
        for whisker in (box.whisker_low, box.whisker_high):
            lines.append(
                f'<line x1="{_num(cx - BOX_WIDTH / 4)}" y1="{_num(y(whisker))}" '
                f'x2="{_num(cx + BOX_WIDTH / 4)}" y2="{_num(y(whisker))}" stroke="#333333"/>'
            )
        lines.append(
            f'<rect x="{_num(left)}" y="{_num(y(box.q3))}" width="{BOX_WIDTH}" '
            f'height="{_num(y(box.q1) - y(box.q3))}" fill="#9ecae1" stroke="#333333"/>'
        )
        lines.append(
            f'<line x1="{_num(left)}" y1="{_num(y(box.median))}" x2="{_num(left + BOX_WIDTH)}" '
            f'y2="{_num(y(box.median))}" stroke="#000000" stroke-width="2"/>'
        )
        label_y = MARGIN_TOP + PLOT_HEIGHT + 20
        lines.append(f'<text x="{_num(cx)}" y="{label_y}" text-anchor="middle">{escape(box.label)}</text>')
        lines.append(
            f'<text x="{_num(cx)}" y="{label_y + 16}" text-anchor="middle" font-size="10">n={box.n}</text>'
        )
        lines.append("</g>")

    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def cell_color(delta: float) -> str:
    """正值红色、负值绿色，强度随 |δ| 增加"""
    magnitude = min(1.0, abs(delta))
    fade = round(255 * (1.0 - magnitude))
    if delta > 0:
        return f"#ff{fade:02x}{fade:02x}"
    if delta < 0:
        return f"#{fade:02x}{round(255 - 95 * magnitude):02x}{fade:02x}"
    return "#ffffff"


def _cell_svg(cell: HeatmapCell, x: float, y: float) -> List[str]:
    opacity = f' fill-opacity="{SHADE_OPACITY}"' if cell.shaded else ""
    shaded = "true" if cell.shaded else "false"
    lines = [
        f'<g class="cell" data-shaded="{shaded}">',
        f'<rect x="{_num(x)}" y="{_num(y)}" width="{CELL}" height="{CELL}" '
        f'fill="{cell_color(cell.delta)}"{opacity} stroke="#999999"/>',
    ]
    if cell.shaded:
        lines.append(
            f'<rect x="{_num(x)}" y="{_num(y)}" width="{CELL}" height="{CELL}" fill="url(#shade)"/>'
        )
    lines.append(
        f'<text x="{_num(x + CELL / 2)}" y="{_num(y + CELL / 2 + 4)}" text-anchor="middle">'
        f"{'+' if cell.delta > 0 else ''}{_num(cell.delta)}</text>"
    )
    lines.append("</g>")
    return lines


def heatmap_svg(heatmap: EffectHeatmap, title: str = "") -> str:
    """
    Cliff's delta 热力图：行相对列，不显著的单元加阴影

    Args:
        heatmap: 效应量矩阵
        title: 图标题

    Returns:
        SVG 文本
    """
    size = len(heatmap.labels)
    width = HEAT_MARGIN + CELL * size + 20
    height = HEAT_MARGIN + CELL * size + 20
    lines = _open(width, height, title)
    lines.append(
        '<defs><pattern id="shade" width="8" height="8" patternUnits="userSpaceOnUse" '
        'patternTransform="rotate(45)"><line x1="0" y1="0" x2="0" y2="8" stroke="#777777" '
        'stroke-width="2"/></pattern></defs>'
    )
    lines.append(f'<text x="{_num(width / 2)}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')

    for index, label in enumerate(heatmap.labels):
        offset = HEAT_MARGIN + CELL * index + CELL / 2
        lines.append(
            f'<text x="{_num(offset)}" y="{HEAT_MARGIN - 10}" text-anchor="start" '
            f'transform="rotate(-45 {_num(offset)} {HEAT_MARGIN - 10})">{escape(label)}</text>'
        )
        lines.append(
            f'<text x="{HEAT_MARGIN - 10}" y="{_num(offset + 4)}" text-anchor="end">{escape(label)}</text>'
        )

    for row, cells in enumerate(heatmap.cells):
        for column, cell in enumerate(cells):
            x = HEAT_MARGIN + CELL * column
            y = HEAT_MARGIN + CELL * row
            if cell is None:
                lines.append(
                    f'<rect x="{_num(x)}" y="{_num(y)}" width="{CELL}" height="{CELL}" '
                    f'fill="#eeeeee" stroke="#999999"/>'
                )
                continue
            lines.extend(_cell_svg(cell, x, y))

    lines.append("</svg>")
    return "\n".join(lines) + "\n"
