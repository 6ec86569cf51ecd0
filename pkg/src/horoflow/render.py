"""Poincare-disk SVG rendering of half-plane point sequences."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .fuchsian import FuchsianGroup, boundary_polygon, build_octagon_group
from .hyperplane import HPoint, cayley

DEFAULT_STYLE = {
    "size": 512,
    "margin": 16,
    "background": "#ffffff",
    "disk_stroke": "#444444",
    "boundary_stroke": "#1f77b4",
    "stroke": "#d62728",
    "stroke_width": 1.0,
    "point_radius": 2.5,
    "jump": 0.5,
}


def disk_coordinates(points) -> list[complex]:
    return [cayley(complex(p)) for p in points]


def _split(points, jump: float) -> list[list[complex]]:
    """Break the path where consecutive disk points are farther apart than ``jump``."""
    segs: list[list[complex]] = []
    for w in disk_coordinates(points):
        if segs and abs(w - segs[-1][-1]) <= jump:
            segs[-1].append(w)
        else:
            segs.append([w])
    return segs


def render_disk(points, style: dict | None = None, group: FuchsianGroup | None = None,
                metadata: str | None = None) -> str:
    """SVG 1.1 document: unit circle, Dirichlet-domain boundary and the point path."""
    points = list(points)
    if not points:
        raise ValueError("need at least one point")
    st = dict(DEFAULT_STYLE)
    st.update({k: v for k, v in (style or {}).items() if k in DEFAULT_STYLE})
    size, margin = float(st["size"]), float(st["margin"])
    r = size / 2 - margin
    c = size / 2

    def xy(w: complex) -> str:
        return f"{c + r * w.real:.6f},{c - r * w.imag:.6f}"

    group = group or build_octagon_group()
    octagon = " ".join(xy(w) for w in disk_coordinates(boundary_polygon(group)))

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size:g}" height="{size:g}" '
        f'viewBox="0 0 {size:g} {size:g}">',
    ]
    if metadata:
        out.append(f"<metadata>{escape(metadata)}</metadata>")
    out += [
        f'<rect x="0" y="0" width="{size:g}" height="{size:g}" fill="{st["background"]}"/>',
        f'<circle cx="{c:g}" cy="{c:g}" r="{r:g}" fill="none" stroke="{st["disk_stroke"]}" stroke-width="1"/>',
        f'<polygon points="{octagon}" fill="none" stroke="{st["boundary_stroke"]}" stroke-width="1"/>',
    ]
    for seg in _split(points, float(st["jump"])):
        if len(seg) == 1:
            p = xy(seg[0]).split(",")
            out.append(f'<circle cx="{p[0]}" cy="{p[1]}" r="{st["point_radius"]}" fill="{st["stroke"]}"/>')
        else:
            out.append(f'<polyline points="{" ".join(xy(w) for w in seg)}" fill="none" '
                       f'stroke="{st["stroke"]}" stroke-width="{st["stroke_width"]}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def sol_leaf_points(X) -> list[HPoint]:
    """Sol points seen in their leaf: ``(x, z) -> x + e^z i``."""
    import math

    return [HPoint(float(x), math.exp(float(z))) for x, _, z in X]
