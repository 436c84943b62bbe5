"""Minimal standalone SVG figures: R-a flows, contour sequences, branches.

Only string assembly; no plotting framework. Coordinates are mapped from data
space into a fixed canvas with a margin, y pointing up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .geometry import Phase, make_rounded_polygon, sample_contour

PHASE_COLORS = {
    Phase.BELOW_ABRADER.value: "#1f5fd1",
    Phase.BETWEEN.value: "#e8b600",
    Phase.CIRCLE.value: "#d62728",
    Phase.INFEASIBLE.value: "#7f7f7f",
}
SNAPSHOT_COLOR = "#8c8c8c"
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def _num(x: float) -> str:
    return f"{x:.4f}".rstrip("0").rstrip(".")


def _points(xy: Iterable[tuple[float, float]]) -> str:
    return " ".join(f"{_num(x)},{_num(y)}" for x, y in xy)


@dataclass
class Canvas:
    """Axis box mapping ``[x0, x1] x [y0, y1]`` onto the drawing area."""

    x0: float
    x1: float
    y0: float
    y1: float
    width: float = 640.0
    height: float = 480.0
    margin: float = 56.0
    body: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("empty plot range")

    def px(self, x: float) -> float:
        return self.margin + (x - self.x0) / (self.x1 - self.x0) * (self.width - 2 * self.margin)

    def py(self, y: float) -> float:
        return self.height - self.margin - (y - self.y0) / (self.y1 - self.y0) * (
            self.height - 2 * self.margin
        )

    def polyline(self, xs, ys, color: str, dashed: bool = False, width: float = 1.5, cls: str = "") -> None:
        pts = [(self.px(x), self.py(y)) for x, y in zip(xs, ys) if math.isfinite(y)]
        if len(pts) < 2:
            return
        dash = ' stroke-dasharray="6 4"' if dashed else ""
        klass = f" class={quoteattr(cls)}" if cls else ""
        self.body.append(
            f'<polyline{klass} points="{_points(pts)}" fill="none" stroke="{color}"'
            f' stroke-width="{width}"{dash}/>'
        )

    def path(self, xs, ys, color: str, dashed: bool, cls: str) -> None:
        pts = [(self.px(x), self.py(y)) for x, y in zip(xs, ys)]
        if not pts:
            return
        d = "M " + " L ".join(f"{_num(x)} {_num(y)}" for x, y in pts)
        dash = ' stroke-dasharray="6 4"' if dashed else ""
        self.body.append(
            f'<path class={quoteattr(cls)} d="{d}" fill="none" stroke="{color}" stroke-width="2"{dash}/>'
        )

    def text(self, x: float, y: float, s: str, anchor: str = "middle", size: int = 12) -> None:
        self.body.append(
            f'<text x="{_num(x)}" y="{_num(y)}" font-size="{size}" text-anchor="{anchor}"'
            f' font-family="sans-serif">{escape(s)}</text>'
        )

    def axes(self, xlabel: str, ylabel: str, ticks: int = 5) -> None:
        left, right = self.px(self.x0), self.px(self.x1)
        bottom, top = self.py(self.y0), self.py(self.y1)
        self.body.append(
            f'<rect x="{_num(left)}" y="{_num(top)}" width="{_num(right - left)}"'
            f' height="{_num(bottom - top)}" fill="none" stroke="black"/>'
        )
        for v in np.linspace(self.x0, self.x1, ticks + 1):
            self.text(self.px(v), bottom + 16, f"{v:.3g}")
        for v in np.linspace(self.y0, self.y1, ticks + 1):
            self.text(left - 6, self.py(v) + 4, f"{v:.3g}", anchor="end")
        self.text((left + right) / 2, self.height - 12, xlabel)
        self.body.append(
            f'<text x="16" y="{_num((top + bottom) / 2)}" font-size="12" font-family="sans-serif"'
            f' text-anchor="middle" transform="rotate(-90 16 {_num((top + bottom) / 2)})">'
            f"{escape(ylabel)}</text>"
        )

    def render(self, title: str = "") -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(self.width)}"'
            f' height="{_num(self.height)}" viewBox="0 0 {_num(self.width)} {_num(self.height)}">\n'
            '<rect width="100%" height="100%" fill="white"/>\n'
        )
        if title:
            head += f"<title>{escape(title)}</title>\n"
        return head + "\n".join(self.body) + "\n</svg>\n"


def ra_flow(
    series: Sequence[tuple[str, np.ndarray, np.ndarray]], r_star: Optional[float] = None
) -> str:
    """Trajectories in the (a, R) plane with the R = a/2 diagonal dashed."""
    if not series:
        raise ValueError("nothing to draw")
    a_hi = max(float(np.nanmax(a)) for _, a, _ in series)
    r_hi = max(a_hi / 2, *(float(np.nanmax(R)) for _, _, R in series))
    if r_star is not None:
        r_hi = max(r_hi, r_star)
    cv = Canvas(0.0, a_hi, 0.0, r_hi * 1.05 or 1.0)
    cv.axes("a", "R")
    cv.polyline([0, a_hi], [0, a_hi / 2], "black", dashed=True, width=1, cls="circle-line")
    if r_star is not None:
        cv.polyline([0, a_hi], [r_star, r_star], "black", dashed=True, width=1, cls="abrader-line")
    for k, (name, a, R) in enumerate(series):
        cv.polyline(a, R, PALETTE[k % len(PALETTE)], cls="trajectory")
        cv.text(cv.px(a[0]), cv.py(R[0]) - 6, name, anchor="end", size=10)
    return cv.render("R-a flow")


def contours(
    n: Optional[int],
    shapes: Sequence[tuple[float, float, str]] = (),
    snapshots: Sequence[np.ndarray] = (),
) -> str:
    """Left-to-right sequence of shapes.

    ``shapes`` holds ``(a, R, phase)`` rows drawn as rounded polygons in the
    phase colour; ``snapshots`` are raw contours drawn in grey. All are drawn
    at a common scale so shrinking is visible.
    """
    items: list[tuple[np.ndarray, str, str]] = []
    for a, R, phase in shapes:
        if n is None:
            raise ValueError("fold count needed to draw model shapes")
        R_draw = min(max(R, 0.0), a / 2) if math.isfinite(R) else a / 2
        pts = sample_contour(make_rounded_polygon(n, a, R_draw), max(12 * n, 240))
        items.append((pts, PHASE_COLORS.get(phase, "black"), phase))
    for pts in snapshots:
        items.append((np.asarray(pts) - np.asarray(pts).mean(axis=0), SNAPSHOT_COLOR, "PDE"))
    if not items:
        raise ValueError("nothing to draw")
    extent = max(float(np.abs(p).max()) for p, _, _ in items)
    cell = 2.2 * extent
    cv = Canvas(0.0, cell * len(items), -cell / 2, cell / 2, width=max(160.0, 110.0 * len(items)), height=170.0, margin=10.0)
    for k, (pts, color, phase) in enumerate(items):
        cx = cell * (k + 0.5)
        closed = np.vstack((pts, pts[:1]))
        xy = [(cv.px(cx + x), cv.py(y)) for x, y in closed]
        cv.body.append(
            f'<polygon class="shape" data-phase={quoteattr(phase)} points="{_points(xy[:-1])}"'
            f' fill="{color}" fill-opacity="0.35" stroke="{color}" stroke-width="1.5"/>'
        )
    return cv.render("contour sequence")


def branches(rows: Sequence[tuple[int, float, float, str]], folds: dict[int, float]) -> str:
    """Homothetic ratio against dilution; stable solid, unstable dashed."""
    if not rows and not folds:
        raise ValueError("nothing to draw")
    ps = [r[1] for r in rows] + list(folds.values())
    p_hi = max(ps) if ps else 1.0
    cv = Canvas(0.0, p_hi * 1.05, 0.0, 0.5)
    cv.axes("p", "R/a")
    ns = sorted({r[0] for r in rows} | set(folds))
    for k, n in enumerate(ns):
        color = PALETTE[k % len(PALETTE)]
        for stab, dashed in (("STABLE", False), ("UNSTABLE", True)):
            pts = sorted((p, al) for m, p, al, st in rows if m == n and st == stab)
            if pts:
                cv.path([p for p, _ in pts], [al for _, al in pts], color, dashed, f"branch n{n} {stab.lower()}")
        if n in folds:
            cv.text(cv.px(folds[n]), cv.py(0.02), f"n={n}", size=10)
    return cv.render("homothetic branches")
