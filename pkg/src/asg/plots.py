"""Report emission: hand-rolled SVG scatter plus a text summary.

SVG is diffable in tests and needs no imaging dependency.
"""

from __future__ import annotations

from pathlib import Path

from .bundle import write_atomic

_W, _H = 640, 480
_MARGIN = 60


def _scale(points: list[tuple[float, float]]) -> tuple:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 - x0 < 1e-9:
        x0, x1 = x0 - 1, x1 + 1
    if y1 - y0 < 1e-9:
        y0, y1 = y0 - 1, y1 + 1
    pad_x = 0.06 * (x1 - x0)
    pad_y = 0.06 * (y1 - y0)
    x0, x1 = x0 - pad_x, x1 + pad_x
    y0, y1 = y0 - pad_y, y1 + pad_y

    def to_px(p):
        x = _MARGIN + (p[0] - x0) / (x1 - x0) * (_W - 2 * _MARGIN)
        y = _H - _MARGIN - (p[1] - y0) / (y1 - y0) * (_H - 2 * _MARGIN)
        return x, y

    return to_px, (x0, x1, y0, y1)


def scatter_svg(
    population: list[tuple[float, float]],
    best: tuple[float, float],
    neighborhood: list[tuple[float, float]] | None = None,
    title: str = "fitness scatter",
) -> str:
    """Fitness-1 vs fitness-2 scatter with the best-sum point highlighted."""
    all_pts = list(population) + [best] + list(neighborhood or [])
    to_px, (x0, x1, y0, y1) = _scale(all_pts)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{_MARGIN}" y1="{_H - _MARGIN}" x2="{_W - _MARGIN}" y2="{_H - _MARGIN}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" y2="{_H - _MARGIN}" stroke="black"/>',
        f'<text x="{_W / 2}" y="{_H - 16}" text-anchor="middle" font-size="12">fitness 1</text>',
        f'<text x="18" y="{_H / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 18 {_H / 2})">fitness 2</text>',
        f'<text x="{_MARGIN}" y="{_H - _MARGIN + 16}" font-size="10">{x0:.1f}</text>',
        f'<text x="{_W - _MARGIN}" y="{_H - _MARGIN + 16}" text-anchor="end" font-size="10">{x1:.1f}</text>',
        f'<text x="{_MARGIN - 4}" y="{_H - _MARGIN}" text-anchor="end" font-size="10">{y0:.1f}</text>',
        f'<text x="{_MARGIN - 4}" y="{_MARGIN + 4}" text-anchor="end" font-size="10">{y1:.1f}</text>',
    ]
    if neighborhood:
        parts.append('<g id="neighborhood" fill="none" stroke="#888">')
        for p in neighborhood:
            x, y = to_px(p)
            parts.append(f'<path d="M {x - 3:.1f} {y - 3:.1f} L {x + 3:.1f} {y + 3:.1f} M {x - 3:.1f} {y + 3:.1f} L {x + 3:.1f} {y - 3:.1f}"/>')
        parts.append("</g>")
    parts.append('<g id="population" fill="#1f77b4">')
    for p in population:
        x, y = to_px(p)
        parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="4"/>')
    parts.append("</g>")
    bx, by = to_px(best)
    parts.append(
        f'<circle id="best-sum" cx="{bx:.1f}" cy="{by:.1f}" r="7" fill="none" stroke="#d62728" stroke-width="2.5"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_summary(
    path: str | Path,
    model: str,
    best_doc: dict,
    feasible_pct: float,
    neighborhood_doc: dict | None = None,
) -> Path:
    lines = [
        f"model: {model}",
        f"final population feasible: {feasible_pct:.1f}%",
        f"best-sum sequence: fitness1={best_doc['fitness1']} fitness2={best_doc['fitness2']} sum={best_doc['sum']}",
        "order (direction): "
        + ", ".join(f"{s['id']} ({s['direction']})" for s in best_doc["steps"]),
        "per-step CSTD: " + ", ".join(str(v) for v in best_doc["step_cstd"]),
    ]
    if neighborhood_doc is not None:
        lines += [
            f"reorder neighbors evaluated: {neighborhood_doc['neighbor_count']}",
            f"neighbor feasible fraction: {neighborhood_doc['feasible_fraction']:.3f}",
            f"dominated by a neighbor: {neighborhood_doc['dominated_by_neighbor']}",
        ]
    return write_atomic(path, "\n".join(lines) + "\n")
