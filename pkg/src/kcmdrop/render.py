"""Deterministic SVG scenes of site sets, droplets and renormalisation columns.

Coordinates stay exact (Fractions) until a number is written out.
"""
from __future__ import annotations

import math
from typing import Iterable, Optional, Sequence
from xml.sax.saxutils import escape

from .droplets import DYD, Droplet
from .geometry import solve2

DEFAULT_STYLE = {
    "scale": 4.0,
    "pad": 4,
    "site": "#333333",
    "dyd": "#1f77b4",
    "cdyd": "#d62728",
    "column": "#7f7f7f",
    "stroke_width": 0.3,
    "digits": 3,
}


def _num(v, digits: int) -> str:
    x = round(float(v), digits)
    if x == 0:
        x = 0.0          # avoid "-0"
    s = f"{x:.{digits}f}".rstrip("0").rstrip(".")
    return s or "0"


def dyd_outline(D: DYD) -> list:
    """Closed boundary of a DYD: v-corner, then the rugged edge from the v1 side to the v2 side.

    With k inner concave corners the rugged edge has 2 + 2k segments; the two
    remaining segments are the v-sides.
    """
    X = D.X
    Y = D.Y
    pts = [D.x, X[0]]
    for i, y in enumerate(Y):
        pts.append(y)
        pts.append(X[i + 1])
    return pts


def _convex_order(pts: Sequence) -> list:
    """Vertices of a convex polygon in counter-clockwise order (floats only decide the order)."""
    n = len(pts)
    cx = sum(float(p[0]) for p in pts) / n
    cy = sum(float(p[1]) for p in pts) / n
    return sorted(pts, key=lambda p: (math.atan2(float(p[1]) - cy, float(p[0]) - cx), p))


def droplet_polygons(D: Droplet) -> list:
    """List of closed polygons covering D (one for a DYD, one per piece for a CDYD)."""
    if isinstance(D, DYD):
        return [dyd_outline(D)]
    out = []
    for h in D.pieces():
        vs = D.frame.vertices(h)
        if len(vs) >= 3:
            out.append(_convex_order(vs))
    return out


def column_segments(geom) -> list:
    """Segments of the V outline and of every column threshold, as point pairs."""
    a = geom.apex
    up1 = geom.frame.dirs.up1
    up2 = geom.frame.dirs.up2
    h1 = up1.dot(a)
    h2 = up2.dot(a)
    u = geom.uhat
    segs = []
    for i in range(0, geom.n_columns + 1):
        t = geom.threshold(i)
        p = solve2(u, t, (up1.dx, up1.dy), h1)
        q = solve2(u, t, (up2.dx, up2.dy), h2)
        if p is not None and q is not None:
            segs.append((p, q))
    top = geom.threshold(0)
    p = solve2(u, top, (up1.dx, up1.dy), h1)
    q = solve2(u, top, (up2.dx, up2.dy), h2)
    segs.append((a, p))
    segs.append((a, q))
    return segs


def render_svg(sites: Iterable = (), droplets: Iterable[Droplet] = (), geom=None,
               style: Optional[dict] = None, title: Optional[str] = None) -> str:
    st = dict(DEFAULT_STYLE)
    if style:
        st.update(style)
    dg = int(st["digits"])
    sites = sorted({(int(p[0]), int(p[1])) for p in sites})
    droplets = sorted(droplets, key=lambda D: D.sort_key())
    polys = [(D.kind, poly) for D in droplets for poly in droplet_polygons(D)]
    segs = column_segments(geom) if geom is not None else []

    xs, ys = [], []
    for p in sites:
        xs += [p[0] - 0.5, p[0] + 0.5]
        ys += [p[1] - 0.5, p[1] + 0.5]
    for _, poly in polys:
        xs += [float(p[0]) for p in poly]
        ys += [float(p[1]) for p in poly]
    for p, q in segs:
        xs += [float(p[0]), float(q[0])]
        ys += [float(p[1]), float(q[1])]

    out = ['<?xml version="1.0" encoding="UTF-8"?>']
    if not xs:
        out.append('<svg xmlns="http://www.w3.org/2000/svg" width="1" height="1" viewBox="0 0 1 1"/>')
        return "\n".join(out) + "\n"
    pad = st["pad"]
    x0, x1 = min(xs) - pad, max(xs) + pad
    y0, y1 = min(ys) - pad, max(ys) + pad
    sc = st["scale"]
    W, H = (x1 - x0) * sc, (y1 - y0) * sc

    def X(v):
        return _num((float(v) - x0) * sc, dg)

    def Y(v):
        # flip so that y grows upwards
        return _num((y1 - float(v)) * sc, dg)

    sw = _num(st["stroke_width"] * sc, dg)
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(W, dg)}" height="{_num(H, dg)}" '
               f'viewBox="0 0 {_num(W, dg)} {_num(H, dg)}">')
    if title:
        out.append(f"<title>{escape(title)}</title>")
    if segs:
        out.append(f'<g id="columns" stroke="{st["column"]}" stroke-width="{sw}" fill="none">')
        for p, q in segs:
            out.append(f'<line x1="{X(p[0])}" y1="{Y(p[1])}" x2="{X(q[0])}" y2="{Y(q[1])}"/>')
        out.append("</g>")
    if polys:
        out.append(f'<g id="droplets" stroke-width="{sw}" fill-opacity="0.15">')
        for kind, poly in polys:
            col = st["dyd"] if kind == "DYD" else st["cdyd"]
            d = "M " + " L ".join(f"{X(p[0])} {Y(p[1])}" for p in poly) + " Z"
            out.append(f'<path class="{kind}" d="{d}" stroke="{col}" fill="{col}"/>')
        out.append("</g>")
    if sites:
        out.append(f'<g id="sites" fill="{st["site"]}">')
        side = _num(sc, dg)
        for p in sites:
            out.append(f'<rect x="{X(p[0] - 0.5)}" y="{Y(p[1] + 0.5)}" width="{side}" height="{side}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
