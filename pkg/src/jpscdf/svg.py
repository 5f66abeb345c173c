"""Static line charts as SVG: axes with ticks, polylines, dashed reference lines, legend."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from html import escape
from typing import Optional, Sequence

__all__ = ["Series", "LineChart", "nice_ticks"]

_COLORS = ("#d62728", "#1f77b4", "#000000", "#2ca02c", "#9467bd", "#ff7f0e")
_DASHES = ("", "6,4", "2,3", "8,3,2,3", "", "6,4")


def nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / max(1, target)
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    k = 0
    while first + k * step <= hi + 1e-9 * step:
        ticks.append(round(first + k * step, 12))
        k += 1
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".") if v != int(v) else str(int(v))


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]


@dataclass
class LineChart:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    width: int = 640
    height: int = 420
    series: list[Series] = field(default_factory=list)
    hlines: list[float] = field(default_factory=list)
    xlim: Optional[tuple[float, float]] = None
    ylim: Optional[tuple[float, float]] = None

    margin_left = 64
    margin_right = 24
    margin_top = 40
    margin_bottom = 52

    def add(self, label: str, x, y) -> "LineChart":
        self.series.append(Series(label, list(map(float, x)), list(map(float, y))))
        return self

    def _limits(self):
        xs = [v for s in self.series for v in s.x if math.isfinite(v)]
        ys = [v for s in self.series for v in s.y if math.isfinite(v)] + list(self.hlines)
        xlim = self.xlim or (min(xs, default=0.0), max(xs, default=1.0))
        if self.ylim:
            ylim = self.ylim
        else:
            lo, hi = min(ys, default=0.0), max(ys, default=1.0)
            pad = 0.05 * (hi - lo or 1.0)
            ylim = (lo - pad, hi + pad)
        return xlim, ylim

    def render(self) -> str:
        (x0, x1), (y0, y1) = self._limits()
        pw = self.width - self.margin_left - self.margin_right
        ph = self.height - self.margin_top - self.margin_bottom
        sx = lambda v: self.margin_left + (v - x0) / ((x1 - x0) or 1.0) * pw
        sy = lambda v: self.margin_top + ph - (v - y0) / ((y1 - y0) or 1.0) * ph
        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif" font-size="12">',
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
        ]
        if self.title:
            out.append(f'<text x="{self.width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(self.title)}</text>')
        left, bottom = self.margin_left, self.margin_top + ph
        out.append(f'<rect x="{left}" y="{self.margin_top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>')
        for tx in nice_ticks(x0, x1):
            X = sx(tx)
            out.append(f'<line x1="{X:.2f}" y1="{bottom}" x2="{X:.2f}" y2="{bottom + 5}" stroke="#444"/>')
            out.append(f'<text x="{X:.2f}" y="{bottom + 18}" text-anchor="middle">{_fmt(tx)}</text>')
        for ty in nice_ticks(y0, y1):
            Y = sy(ty)
            out.append(f'<line x1="{left - 5}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" stroke="#444"/>')
            out.append(f'<text x="{left - 8}" y="{Y + 4:.2f}" text-anchor="end">{_fmt(ty)}</text>')
        if self.xlabel:
            out.append(f'<text x="{left + pw / 2:.1f}" y="{self.height - 12}" text-anchor="middle">{escape(self.xlabel)}</text>')
        if self.ylabel:
            cy = self.margin_top + ph / 2
            out.append(f'<text x="16" y="{cy:.1f}" text-anchor="middle" transform="rotate(-90 16 {cy:.1f})">{escape(self.ylabel)}</text>')
        for hv in self.hlines:
            if y0 <= hv <= y1:
                out.append(f'<line x1="{left}" y1="{sy(hv):.2f}" x2="{left + pw}" y2="{sy(hv):.2f}" '
                           f'stroke="#888" stroke-dasharray="4,4"/>')
        for i, s in enumerate(self.series):
            pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(s.x, s.y) if math.isfinite(b))
            dash = _DASHES[i % len(_DASHES)]
            dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
            out.append(f'<polyline fill="none" stroke="{_COLORS[i % len(_COLORS)]}" stroke-width="1.8"{dash_attr} points="{pts}"/>')
        for i, s in enumerate(self.series):
            ly = self.margin_top + 14 + 16 * i
            lx = left + pw - 110
            dash = _DASHES[i % len(_DASHES)]
            dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
            out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{_COLORS[i % len(_COLORS)]}" stroke-width="1.8"{dash_attr}/>')
            out.append(f'<text x="{lx + 30}" y="{ly + 4}">{escape(s.label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())
