"""Tiny SVG writer: polylines and dots on one pair of axes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Figure:
    width: int = 640
    height: int = 420
    title: str = ""
    margin: int = 40
    _items: list = field(default_factory=list)

    def line(self, x, y, color: str | None = None, label: str = ""):
        self._items.append(("line", np.asarray(x, float), np.asarray(y, float), color, label))
        return self

    def dots(self, x, y, color: str = "#555555", r: float = 0.8):
        self._items.append(("dots", np.asarray(x, float), np.asarray(y, float), color, r))
        return self

    def _bounds(self):
        xs = np.concatenate([it[1] for it in self._items])
        ys = np.concatenate([it[2] for it in self._items])
        ok = np.isfinite(xs) & np.isfinite(ys)
        x0, x1 = float(xs[ok].min()), float(xs[ok].max())
        y0, y1 = float(ys[ok].min()), float(ys[ok].max())
        pad = 0.05 * (y1 - y0 or 1.0)
        return x0, (x1 if x1 > x0 else x0 + 1.0), y0 - pad, y1 + pad

    def render(self) -> str:
        if not self._items:
            raise ValueError("nothing to draw")
        x0, x1, y0, y1 = self._bounds()
        m, w, h = self.margin, self.width, self.height

        def px(x):
            return m + (x - x0) / (x1 - x0) * (w - 2 * m)

        def py(y):
            return h - m - (y - y0) / (y1 - y0) * (h - 2 * m)

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
            f'<rect width="{w}" height="{h}" fill="white"/>',
            f'<rect x="{m}" y="{m}" width="{w - 2 * m}" height="{h - 2 * m}" fill="none" stroke="#999"/>',
            f'<text x="{m}" y="{h - m / 3:.0f}" font-size="11">x: {x0:.3g} .. {x1:.3g}</text>',
            f'<text x="{m}" y="{m * 2 / 3:.0f}" font-size="11">s: {y0:.4g} .. {y1:.4g}  {self.title}</text>',
        ]
        k = 0
        for kind, x, y, color, extra in self._items:
            ok = np.isfinite(x) & np.isfinite(y)
            if kind == "dots":
                out.append(f'<g fill="{color}">')
                out += [f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="{extra}"/>' for a, b in zip(x[ok], y[ok])]
                out.append("</g>")
            else:
                color = color or PALETTE[k % len(PALETTE)]
                k += 1
                pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[ok], y[ok]))
                out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"><title>{extra}</title></polyline>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.render())
