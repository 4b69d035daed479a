"""Droplets: clusters, distorted Young diagrams, spans, cuts and the merging algorithm.

Shapes live in a fixed frame of four Pythagorean directions (u1, u2, v1, v2),
so their unit normals are rational and every predicate here is exact.
A DYD is stored by its two v-supports and its convex corners, each corner
being a pair of u1/u2-supports; a CDYD by its corners and a boundary region.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Optional, Sequence

import networkx as nx
import numpy as np
from scipy.spatial import cKDTree

from .bootstrap import (Boundary, CanonicalDirections, SiteSet, UpdateFamily, _close,
                        boundary_is_stable, closure_with_boundary)
from .geometry import DirectionVector, GeometryError, HalfPlane, Length, Window, dist2, solve2

F = Fraction


class DropletError(ValueError):
    """Structural misuse of droplet operations."""


class SearchLimitError(RuntimeError):
    """An exhaustive search exceeded its configured cap."""


# -- constants -------------------------------------------------------------

@dataclass(frozen=True)
class DropletConstants:
    C1: Fraction = F(8)
    C2p: Fraction = F(16)
    C2: Fraction = F(32)
    C3: Fraction = F(96)
    C4p: Fraction = F(192)
    C4: Fraction = F(384)
    C5: Fraction = F(768)

    def __post_init__(self):
        for k in ("C1", "C2p", "C2", "C3", "C4p", "C4", "C5"):
            object.__setattr__(self, k, F(getattr(self, k)))

    def as_tuple(self) -> tuple:
        return (self.C1, self.C2p, self.C2, self.C3, self.C4p, self.C4, self.C5)

    def validate(self, alpha=None) -> None:
        vals = self.as_tuple()
        if vals[0] <= 0:
            raise DropletError("constants must be positive")
        names = ("C1", "C2'", "C2", "C3", "C4'", "C4", "C5")
        for i in range(len(vals) - 1):
            if not vals[i] < vals[i + 1]:
                raise DropletError(f"constants must increase: {names[i]}={vals[i]} >= {names[i+1]}={vals[i+1]}")
        if alpha is not None and alpha != math.inf and (self.C3 - self.C2) / self.C2 < alpha:
            raise DropletError(f"(C3-C2)/C2 = {(self.C3 - self.C2) / self.C2} < alpha = {alpha}")

    def to_json(self) -> dict:
        return {"C1": str(self.C1), "C2p": str(self.C2p), "C2": str(self.C2), "C3": str(self.C3),
                "C4p": str(self.C4p), "C4": str(self.C4), "C5": str(self.C5)}

    @classmethod
    def from_json(cls, d) -> "DropletConstants":
        return cls(**{k: F(str(v)) for k, v in d.items()})


# -- frame and exact 2D linear feasibility ----------------------------------

U1, U2, V1, V2, L0, L1, L2, P0, P1, P2, RHO, NRHO = range(12)
NCONS = 12


def _vec(d: DirectionVector):
    return (F(d.dx), F(d.dy))


def _neg(v):
    return (-v[0], -v[1])


def _solve_comb(c, a, b):
    """(x, y) with c = x*a + y*b, or None if a, b are parallel."""
    det = a[0] * b[1] - a[1] * b[0]
    if det == 0:
        return None
    x = (c[0] * b[1] - c[1] * b[0]) / det
    y = (a[0] * c[1] - a[1] * c[0]) / det
    return x, y


class Frame:
    """The direction set S and the boundary normals, with cached LP tables.

    Constraint systems are 12-tuples ``h`` (None for absent) meaning
    ``<n_i, p> < h_i`` for the normals of this frame:
    u1, u2, v1, v2 (unit), the three inward boundary normals, the three
    outward ones, and +-rho where rho is v1 turned by a quarter.
    """

    def __init__(self, dirs: CanonicalDirections):
        for d in dirs.S:
            if not d.is_pythagorean():
                raise DropletError(f"frame direction {d!r} must have integer length")
        self.dirs = dirs
        u1, u2, v1, v2 = (d.unit() for d in dirs.S)
        rho = dirs.v1.rot90().unit()
        up, up1, up2 = _vec(dirs.up), _vec(dirs.up1), _vec(dirs.up2)
        self.normals = [u1, u2, v1, v2, _neg(up), _neg(up1), _neg(up2), up, up1, up2, rho, _neg(rho)]
        self._circuits = self._find_circuits()
        self._mask_circuits: dict = {}
        self._mask_decomp: dict = {}
        self.key = tuple((d.dx, d.dy) for d in dirs.S + (dirs.up, dirs.up1, dirs.up2))

    def __eq__(self, other):
        return isinstance(other, Frame) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def _find_circuits(self):
        n = self.normals
        out = []
        for i, j in itertools.combinations(range(NCONS), 2):
            s = _solve_comb((F(0), F(0)), n[i], n[j])
            if s is None:  # parallel: opposite pairs are circuits
                if n[i][0] * n[j][0] + n[i][1] * n[j][1] < 0:
                    k = (abs(n[i][0]) + abs(n[i][1])) / (abs(n[j][0]) + abs(n[j][1]))
                    out.append(((i, j), (F(1), k)))
        for i, j, k in itertools.combinations(range(NCONS), 3):
            s = _solve_comb(_neg(n[k]), n[i], n[j])
            if s is not None and s[0] > 0 and s[1] > 0:
                out.append(((i, j, k), (s[0], s[1], F(1))))
        return out

    @staticmethod
    def mask(h) -> int:
        m = 0
        for i, v in enumerate(h):
            if v is not None:
                m |= 1 << i
        return m

    def feasible(self, h) -> bool:
        """Whether the open system <n_i,p> < h_i has a solution (Helly + Motzkin)."""
        m = self.mask(h)
        circ = self._mask_circuits.get(m)
        if circ is None:
            circ = [c for c in self._circuits if all(m >> i & 1 for i in c[0])]
            self._mask_circuits[m] = circ
        for idx, lam in circ:
            s = 0
            for i, l in zip(idx, lam):
                s += l * h[i]
            if s <= 0:
                return False
        return True

    def sup(self, h, c: int):
        """sup of <n_c, p> over the closure of a feasible system; None if unbounded."""
        m = self.mask(h)
        key = (m, c)
        dec = self._mask_decomp.get(key)
        if dec is None:
            dec = []
            n = self.normals
            idx = [i for i in range(NCONS) if m >> i & 1]
            target = n[c]
            for i in idx:
                # parallel, same orientation
                if n[i][0] * target[1] - n[i][1] * target[0] == 0 and \
                        n[i][0] * target[0] + n[i][1] * target[1] > 0:
                    lam = (abs(target[0]) + abs(target[1])) / (abs(n[i][0]) + abs(n[i][1]))
                    dec.append(((i,), (lam,)))
            for i, j in itertools.combinations(idx, 2):
                s = _solve_comb(target, n[i], n[j])
                if s is not None and s[0] >= 0 and s[1] >= 0:
                    dec.append(((i, j), s))
            self._mask_decomp[key] = dec
        best = None
        for ids, lam in dec:
            v = 0
            for i, l in zip(ids, lam):
                v += l * h[i]
            if best is None or v < best:
                best = v
        return best

    def vertices(self, h) -> list:
        """Vertices of the closure of a feasible bounded system."""
        idx = [i for i in range(NCONS) if h[i] is not None]
        n = self.normals
        pts = set()
        for i, j in itertools.combinations(idx, 2):
            p = solve2(n[i], h[i], n[j], h[j])
            if p is None:
                continue
            if all(n[k][0] * p[0] + n[k][1] * p[1] <= h[k] for k in idx):
                pts.add(p)
        return sorted(pts)

    def vertices_float(self, h) -> list:
        """Float approximation of ``vertices`` (feasibility tested with a tolerance)."""
        idx = [i for i in range(NCONS) if h[i] is not None]
        n = self._fnormals
        hv = {i: float(h[i]) for i in idx}
        pts = []
        for a, b in itertools.combinations(idx, 2):
            (a0, a1), (b0, b1) = n[a], n[b]
            det = a0 * b1 - a1 * b0
            if abs(det) < 1e-12:
                continue
            x = (hv[a] * b1 - hv[b] * a1) / det
            y = (a0 * hv[b] - b0 * hv[a]) / det
            tol = 1e-9 * (1 + abs(x) + abs(y))
            if all(n[k][0] * x + n[k][1] * y <= hv[k] + tol for k in idx):
                pts.append((x, y))
        return pts

    @cached_property
    def _fnormals(self) -> list:
        return [(float(a), float(b)) for a, b in self.normals]

    def dot(self, i: int, p):
        n = self.normals[i]
        return n[0] * p[0] + n[1] * p[1]

    def point(self, a1, a2):
        """The point with u1-support a1 and u2-support a2."""
        return solve2(self.normals[U1], a1, self.normals[U2], a2)

    @cached_property
    def size_ratio(self) -> tuple:
        """(c, c') with c*|D| <= diam(D) <= c'*|D| for every DYD (as floats)."""
        # |D| is a projection length, so diam >= |D|; the upper constant comes
        # from the quadrilateral shape, whose diameter is linear in |D|.
        return (1.0, self._upper_ratio())

    def _upper_ratio(self) -> float:
        # evaluate on unit-size quadrilaterals with the corner swept along the
        # u-sides: diam/|D| is invariant under scaling and translation
        worst = 1.0
        for t in range(0, 21):
            tt = F(t, 20)
            q = DYD.build(self, F(1), F(1), [(F(1) + 10 * tt, F(1) + 10 * (1 - tt))])
            if q is None:
                continue
            worst = max(worst, float(q.diameter()) / float(q.size()))
        return worst * 1.5


def _h(**kw):
    h = [None] * NCONS
    for k, v in kw.items():
        h[globals()[k]] = v
    return h


# -- boundary region -------------------------------------------------------

@dataclass(frozen=True)
class BoundaryRegion:
    """The infected region H_u'(b) u H_u'1(a0) u H_u'2(a0); its complement is Lambda.

    ``b`` anchors the straight cut and defaults to the origin.
    """

    a0: tuple
    up: DirectionVector
    up1: DirectionVector
    up2: DirectionVector
    b: tuple = (0, 0)

    def __post_init__(self):
        object.__setattr__(self, "a0", (F(self.a0[0]), F(self.a0[1])))
        object.__setattr__(self, "b", (F(self.b[0]), F(self.b[1])))

    @classmethod
    def for_frame(cls, frame: Frame, a0=(0, 0), b=(0, 0)) -> "BoundaryRegion":
        d = frame.dirs
        return cls(a0, d.up, d.up1, d.up2, b)

    def _planes(self):
        return ((self.up, self.b), (self.up1, self.a0), (self.up2, self.a0))

    @cached_property
    def halfplanes(self) -> tuple:
        return tuple(HalfPlane(n, a) for n, a in self._planes())

    @cached_property
    def as_boundary(self) -> Boundary:
        return Boundary(self.halfplanes)

    def contains(self, p) -> bool:
        """p in the (open) boundary region."""
        return self.as_boundary.contains(p)

    def in_lambda(self, p) -> bool:
        return not self.contains(p)

    def in_lambda_interior(self, p) -> bool:
        return all(n.dot(p) > n.dot(a) for n, a in self._planes())

    @cached_property
    def _offsets(self) -> tuple:
        return tuple((n.dx, n.dy, n.dot(a), n.norm2) for n, a in self._planes())

    def dist2(self, p) -> Fraction:
        """Squared Euclidean distance from p (in Lambda) to the boundary region."""
        best = None
        for dx, dy, off, nn in self._offsets:
            s = dx * p[0] + dy * p[1] - off
            if s < 0:
                return F(0)
            d = F(s) * s / nn
            if best is None or d < best:
                best = d
        return best

    def lam_constraints(self, h: list) -> list:
        h = list(h)
        h[L0] = -self.up.dot(self.b)
        h[L1] = -self.up1.dot(self.a0)
        h[L2] = -self.up2.dot(self.a0)
        return h

    def to_json(self) -> dict:
        return {"a0": [str(self.a0[0]), str(self.a0[1])], "b": [str(self.b[0]), str(self.b[1])],
                "up": [self.up.dx, self.up.dy], "up1": [self.up1.dx, self.up1.dy],
                "up2": [self.up2.dx, self.up2.dy]}

    @classmethod
    def from_json(cls, d) -> "BoundaryRegion":
        return cls((F(d["a0"][0]), F(d["a0"][1])), DirectionVector(*d["up"]), DirectionVector(*d["up1"]),
                   DirectionVector(*d["up2"]), (F(d["b"][0]), F(d["b"][1])))


# -- shapes ------------------------------------------------------------------

def _pareto(corners) -> tuple:
    """Undominated (a1, a2) pairs, sorted by a1 ascending."""
    out = []
    best = None
    for c in sorted(set(corners), key=lambda c: (-c[0], -c[1])):
        if best is None or c[1] > best:
            out.append(c)
            best = c[1]
    return tuple(sorted(out))


def _fmt(v: Fraction) -> str:
    return str(v)


def _pt(p) -> list:
    return [_fmt(p[0]), _fmt(p[1])]


class Droplet:
    """Common interface of DYD and CDYD."""

    frame: Frame
    corners: tuple
    kind: str

    def pieces(self) -> list:
        raise NotImplementedError

    @cached_property
    def all_vertices(self) -> list:
        pts = set()
        for h in self.pieces():
            pts.update(self.frame.vertices(h))
        return sorted(pts)

    @cached_property
    def bbox(self) -> tuple:
        # only a prefilter for ``meets``, so float vertices with slack suffice
        xs, ys = [], []
        for h in self.pieces():
            for p in self.frame.vertices_float(h):
                xs.append(p[0])
                ys.append(p[1])
        eps = 1e-6 * (1 + max(map(abs, xs + ys)))
        return (min(xs) - eps, max(xs) + eps, min(ys) - eps, max(ys) + eps)

    def diameter(self) -> Length:
        vs = self.all_vertices
        best = F(0)
        for p, q in itertools.combinations(vs, 2):
            d = dist2(p, q)
            if d > best:
                best = d
        return Length(best)

    def meets(self, other: "Droplet") -> bool:
        a, b = self.bbox, other.bbox
        if a[1] < b[0] or b[1] < a[0] or a[3] < b[2] or b[3] < a[2]:
            return False
        fr = self.frame
        for h1 in self.pieces():
            for h2 in other.pieces():
                h = [x if y is None else (y if x is None else min(x, y)) for x, y in zip(h1, h2)]
                if fr.feasible(h):
                    return True
        return False

    def lattice_points(self) -> list:
        x0, x1, y0, y1 = self.bbox
        return [(x, y) for x in range(math.floor(x0), math.ceil(x1) + 1)
                for y in range(math.floor(y0), math.ceil(y1) + 1) if self.contains_point((x, y))]

    def sort_key(self):
        return (self.kind, self.corners, getattr(self, "B", ()))


@dataclass(frozen=True, eq=False)
class DYD(Droplet):
    frame: Frame
    B: tuple                # (sup <v1,.>, sup <v2,.>)
    corners: tuple          # ((A1, A2), ...) sorted, pairwise undominated
    kind = "DYD"

    def __eq__(self, other):
        return isinstance(other, DYD) and self.frame == other.frame and \
            self.B == other.B and self.corners == other.corners

    def __hash__(self):
        return hash((self.B, self.corners))

    def __repr__(self):
        return f"DYD(B={tuple(map(str, self.B))}, corners={[tuple(map(str, c)) for c in self.corners]})"

    @staticmethod
    def build(frame: Frame, B1, B2, corners) -> Optional["DYD"]:
        """Canonical DYD for the given supports; None when the region is empty."""
        B1, B2 = F(B1), F(B2)
        clamped = []
        for A1, A2 in corners:
            h = [F(A1), F(A2), B1, B2] + [None] * 8
            if not frame.feasible(h):
                continue
            clamped.append((frame.sup(h, U1), frame.sup(h, U2)))
        if not clamped:
            return None
        cs = _pareto(clamped)
        nb1 = max(frame.sup([c[0], c[1], B1, B2] + [None] * 8, V1) for c in cs)
        nb2 = max(frame.sup([c[0], c[1], B1, B2] + [None] * 8, V2) for c in cs)
        return DYD(frame, (nb1, nb2), cs)

    def pieces(self) -> list:
        B1, B2 = self.B
        return [[a1, a2, B1, B2] + [None] * 8 for a1, a2 in self.corners]

    def contains_point(self, p) -> bool:
        fr = self.frame
        if not (fr.dot(V1, p) < self.B[0] and fr.dot(V2, p) < self.B[1]):
            return False
        a1, a2 = fr.dot(U1, p), fr.dot(U2, p)
        return any(a1 < c1 and a2 < c2 for c1, c2 in self.corners)

    @property
    def x(self):
        """The v-corner."""
        fr = self.frame
        return solve2(fr.normals[V1], self.B[0], fr.normals[V2], self.B[1])

    @property
    def Y(self) -> list:
        """Convex corners as points."""
        return [self.frame.point(a1, a2) for a1, a2 in self.corners]

    @property
    def y(self):
        """The u-corner of Q(D)."""
        return self.frame.point(max(c[0] for c in self.corners), max(c[1] for c in self.corners))

    @property
    def X(self) -> list:
        """Concave corners: the end on the v1 side, the inner ones, the end on the v2 side."""
        fr = self.frame
        n = fr.normals
        cs = self.corners
        first = solve2(n[U2], cs[0][1], n[V1], self.B[0])
        last = solve2(n[U1], cs[-1][0], n[V2], self.B[1])
        inner = [fr.point(cs[i][0], cs[i + 1][1]) for i in range(len(cs) - 1)]
        return [first] + inner + [last]

    @staticmethod
    def from_concave(frame: Frame, x, X) -> Optional["DYD"]:
        """Rebuild from the v-corner and the concave corners (inverse of ``X``)."""
        fr = frame
        B1, B2 = fr.dot(V1, x), fr.dot(V2, x)
        corners = [(fr.dot(U1, X[i]), fr.dot(U2, X[i - 1])) for i in range(1, len(X))]
        return DYD.build(frame, B1, B2, corners)

    def quad(self) -> "DYD":
        """Q(D): the smallest quadrilateral with sides normal to S containing D."""
        a1 = max(c[0] for c in self.corners)
        a2 = max(c[1] for c in self.corners)
        return DYD.build(self.frame, self.B[0], self.B[1], [(a1, a2)])

    def meets_boundary(self, bd: BoundaryRegion) -> bool:
        fr = self.frame
        planes = ((P0, bd.up.dot(bd.b)), (P1, bd.up1.dot(bd.a0)), (P2, bd.up2.dot(bd.a0)))
        for h in self.pieces():
            for i, off in planes:
                g = list(h)
                g[i] = F(off)
                if fr.feasible(g):
                    return True
        return False

    def size(self) -> Length:
        fr = self.frame
        hi = max(fr.sup(h, RHO) for h in self.pieces())
        lo = max(fr.sup(h, NRHO) for h in self.pieces())
        return Length.rational(hi + lo)

    def contains(self, other: Droplet) -> bool:
        fr = self.frame
        for h in other.pieces():
            if fr.sup(h, V1) > self.B[0] or fr.sup(h, V2) > self.B[1]:
                return False
            c = (fr.sup(h, U1), fr.sup(h, U2))
            if not any(c[0] <= a1 and c[1] <= a2 for a1, a2 in self.corners):
                return False
        return True

    def to_record(self) -> dict:
        return {"kind": "DYD", "S": [list(v) for v in self.frame.key[:4]],
                "corners": [_pt(p) for p in self.Y], "x": _pt(self.x), "boundary": None}


@dataclass(frozen=True, eq=False)
class CDYD(Droplet):
    frame: Frame
    boundary: BoundaryRegion
    corners: tuple
    kind = "CDYD"

    def __eq__(self, other):
        return isinstance(other, CDYD) and self.frame == other.frame and \
            self.boundary == other.boundary and self.corners == other.corners

    def __hash__(self):
        return hash(self.corners)

    def __repr__(self):
        return f"CDYD(corners={[tuple(map(str, c)) for c in self.corners]})"

    @staticmethod
    def build(frame: Frame, boundary: BoundaryRegion, corners) -> Optional["CDYD"]:
        keep = [(F(a1), F(a2)) for a1, a2 in corners
                if boundary.in_lambda_interior(frame.point(F(a1), F(a2)))]
        if not keep:
            return None
        return CDYD(frame, boundary, _pareto(keep))

    def pieces(self) -> list:
        base = self.boundary.lam_constraints([None] * NCONS)
        out = []
        for a1, a2 in self.corners:
            h = list(base)
            h[U1], h[U2] = a1, a2
            out.append(h)
        return out

    def contains_point(self, p) -> bool:
        if not self.boundary.in_lambda(p):
            return False
        fr = self.frame
        a1, a2 = fr.dot(U1, p), fr.dot(U2, p)
        return any(a1 < c1 and a2 < c2 for c1, c2 in self.corners)

    @property
    def Y(self) -> list:
        return [self.frame.point(a1, a2) for a1, a2 in self.corners]

    @property
    def concave(self) -> list:
        fr = self.frame
        cs = self.corners
        return [fr.point(cs[i][0], cs[i + 1][1]) for i in range(len(cs) - 1)]

    def is_connected(self) -> bool:
        return all(self.boundary.in_lambda_interior(p) for p in self.concave)

    def size(self) -> Length:
        if not self.is_connected():
            raise DropletError("size of a disconnected CDYD is undefined")
        C1 = _current_c1(self)
        return Length(self.diameter().sq / (C1 * C1))

    def contains(self, other: Droplet) -> bool:
        fr = self.frame
        if isinstance(other, DYD) and other.meets_boundary(self.boundary):
            return False
        for h in other.pieces():
            c = (fr.sup(h, U1), fr.sup(h, U2))
            if not any(c[0] <= a1 and c[1] <= a2 for a1, a2 in self.corners):
                return False
        return True

    def to_record(self) -> dict:
        return {"kind": "CDYD", "S": [list(v) for v in self.frame.key[:4]],
                "corners": [_pt(p) for p in self.Y], "boundary": self.boundary.to_json()}


# CDYD sizes divide by C1; the constant is attached per frame.
_C1_BY_FRAME: dict = {}


def set_size_constant(frame: Frame, C1) -> None:
    _C1_BY_FRAME[frame.key] = F(C1)


def _current_c1(d: Droplet) -> Fraction:
    return _C1_BY_FRAME.get(d.frame.key, DropletConstants().C1)


def size(D: Droplet) -> Length:
    return D.size()


def rho_width(D: Droplet) -> Fraction:
    """Extent of D across the v1 direction; equals |D| for a DYD."""
    fr = D.frame
    ps = D.pieces()
    return max(fr.sup(h, RHO) for h in ps) + max(fr.sup(h, NRHO) for h in ps)


def scale(D: Droplet) -> Length:
    """max(|D|, rho_width(D)): an upper bound for the size of any DYD or
    connected CDYD inside D, nondecreasing under containment once C1 is at
    least the diameter/size ratio of the frame."""
    w = Length.rational(rho_width(D))
    if isinstance(D, DYD) or not D.is_connected():
        return w
    s = D.size()
    return s if s > w else w


def droplet_from_record(rec: dict, frame: Frame) -> Droplet:
    pts = [(F(a), F(b)) for a, b in rec["corners"]]
    corners = [(frame.dot(U1, p), frame.dot(U2, p)) for p in pts]
    if rec["kind"] == "DYD":
        x = (F(rec["x"][0]), F(rec["x"][1]))
        return DYD.build(frame, frame.dot(V1, x), frame.dot(V2, x), corners)
    return CDYD.build(frame, BoundaryRegion.from_json(rec["boundary"]), corners)


# -- algebra ---------------------------------------------------------------

def cut(D: Droplet, boundary: BoundaryRegion) -> Optional[CDYD]:
    """C(D): the CDYD with the same convex corners; identity on CDYD."""
    if isinstance(D, CDYD):
        if D.boundary != boundary:
            raise DropletError("CDYD has a different boundary")
        return D
    return CDYD.build(D.frame, boundary, D.corners)


def span(D1: Droplet, D2: Droplet) -> Droplet:
    """Minimal DYD (or CDYD, if either input is one) containing both."""
    if D1.frame != D2.frame:
        raise DropletError("droplets built on different direction sets")
    if isinstance(D1, DYD) and isinstance(D2, DYD):
        return DYD.build(D1.frame, max(D1.B[0], D2.B[0]), max(D1.B[1], D2.B[1]),
                         D1.corners + D2.corners)
    bd = D1.boundary if isinstance(D1, CDYD) else D2.boundary
    c1, c2 = cut(D1, bd), cut(D2, bd)
    parts = [c for c in (c1, c2) if c is not None]
    return CDYD.build(D1.frame, bd, sum((c.corners for c in parts), ()))


def quad_of_cluster(C: Iterable, reach, frame: Frame) -> DYD:
    """Q(C) for reach C4, Q'(C) for reach C4'."""
    C = list(C)
    if not C:
        raise DropletError("empty cluster")
    reach = F(reach)
    sup = [max(frame.dot(i, c) for c in C) + reach for i in (U1, U2, V1, V2)]
    return DYD.build(frame, sup[2], sup[3], [(sup[0], sup[1])])


# -- clusters and crumbs -------------------------------------------------------

@dataclass
class Cluster:
    sites: frozenset
    boundary: bool


@dataclass
class ComponentReport:
    clusters: list
    crumbs: list
    components: list = field(default_factory=list)


def _components(pts: list, r2: Fraction) -> list:
    if not pts:
        return []
    arr = np.array(pts, dtype=float)
    tree = cKDTree(arr)
    g = nx.Graph()
    g.add_nodes_from(range(len(pts)))
    for i, j in tree.query_pairs(math.sqrt(float(r2)) + 1e-9):
        if dist2(pts[i], pts[j]) <= r2:
            g.add_edge(i, j)
    return [sorted(pts[i] for i in comp) for comp in nx.connected_components(g)]


def _diam2(pts) -> Fraction:
    best = 0
    for p, q in itertools.combinations(pts, 2):
        d = (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2
        if d > best:
            best = d
    return F(best)


def maximal_clusters(comp: Sequence, link2: Fraction, diam2: Fraction, cap: int = 20000) -> list:
    """All maximal linked subsets of ``comp`` with squared diameter <= diam2."""
    comp = list(comp)
    if _diam2(comp) <= diam2:
        return [frozenset(comp)]
    near = nx.Graph()
    near.add_nodes_from(comp)
    link = nx.Graph()
    link.add_nodes_from(comp)
    arr = np.array(comp, dtype=float)
    tree = cKDTree(arr)
    for i, j in tree.query_pairs(math.sqrt(float(diam2)) + 1e-9):
        p, q = comp[i], comp[j]
        d = dist2(p, q)
        if d <= diam2:
            near.add_edge(p, q)
            if d <= link2:
                link.add_edge(p, q)
    found = set()
    for n, clique in enumerate(nx.find_cliques(near)):
        if n >= cap:
            raise SearchLimitError("too-large: cluster decomposition exceeds clique cap")
        for part in nx.connected_components(link.subgraph(clique)):
            found.add(frozenset(part))
    ordered = sorted(found, key=len, reverse=True)
    out = []
    for s in ordered:
        if not any(s < t for t in out):
            out.append(s)
    return sorted(out, key=lambda s: sorted(s))


def crumb_test(G: Iterable, alpha: int, fam: UpdateFamily, radius=None, cap: int = 200000) -> bool:
    """Whether some P of alpha-1 sites near G has closure containing G."""
    G = frozenset(G)
    if alpha <= 1 or not G:
        return False
    radius = F(radius) if radius is not None else F(4)
    r = math.ceil(radius)
    cand = sorted({(g[0] + dx, g[1] + dy) for g in G for dx in range(-r, r + 1) for dy in range(-r, r + 1)
                   if dx * dx + dy * dy <= radius * radius})
    k = alpha - 1
    if math.comb(len(cand), k) > cap:
        raise SearchLimitError("too-large: crumb search space exceeds cap")
    win = Window.around(list(G), pad=4 * r + 4 * fam.reach, margin=fam.reach)
    for P in itertools.combinations(cand, k):
        infected, _ = _close([p for p in P if p in win], fam, win, None)
        if G <= infected:
            return True
    return False


def classify_components(K: Iterable, consts: DropletConstants, boundary: Optional[BoundaryRegion],
                        modified: bool = False, alpha: int = 1, fam: Optional[UpdateFamily] = None,
                        cap: int = 20000) -> ComponentReport:
    """Split K into crumbs and maximal clusters of diameter at most C3."""
    pts = sorted({(int(p[0]), int(p[1])) for p in K})
    link = consts.C2p if modified else consts.C2
    link2 = link * link
    comps = _components(pts, link2)
    clusters, crumbs = [], []
    for comp in comps:
        far = boundary is None or min(boundary.dist2(p) for p in comp) > link2
        if far and alpha > 1 and fam is not None and crumb_test(comp, alpha, fam, consts.C1 / 2):
            crumbs.append(frozenset(comp))
            continue
        for c in maximal_clusters(comp, link2, consts.C3 * consts.C3, cap):
            near = boundary is not None and min(boundary.dist2(p) for p in c) <= link2
            clusters.append(Cluster(c, near))
    clusters.sort(key=lambda c: sorted(c.sites))
    return ComponentReport(clusters, crumbs, [frozenset(c) for c in comps])


# -- the droplet algorithm -------------------------------------------------

@dataclass
class MergeNode:
    droplet: Droplet
    parents: tuple


@dataclass
class AlgorithmResult:
    droplets: list
    report: ComponentReport
    history: list          # MergeNode list; node i may reference earlier nodes
    final_ids: list

    def ancestry(self, i: int) -> list:
        seen, stack = set(), [i]
        while stack:
            j = stack.pop()
            if j in seen:
                continue
            seen.add(j)
            stack.extend(self.history[j].parents)
        return sorted(seen)


def _finish(D: Droplet, boundary: Optional[BoundaryRegion]) -> Optional[Droplet]:
    if boundary is not None and isinstance(D, DYD) and D.meets_boundary(boundary):
        return cut(D, boundary)
    return D


def droplet_algorithm(K: Iterable, boundary: Optional[BoundaryRegion], consts: DropletConstants,
                      modified: bool, fam: Optional[UpdateFamily], frame: Frame, alpha: int = 1,
                      order_seed: Optional[int] = None, cap: int = 20000) -> AlgorithmResult:
    """Cover K by disjoint droplets, merging intersecting ones by span.

    ``order_seed`` shuffles the merge order; the output does not depend on it.
    """
    set_size_constant(frame, consts.C1)
    report = classify_components(K, consts, boundary, modified, alpha, fam, cap)
    reach = consts.C4p if modified else consts.C4
    history: list = []
    initial = []
    for c in report.clusters:
        D = _finish(quad_of_cluster(c.sites, reach, frame), boundary)
        if D is None:
            continue
        history.append(MergeNode(D, ()))
        initial.append(len(history) - 1)
    rng = random.Random(order_seed) if order_seed is not None else None
    if rng is not None:
        rng.shuffle(initial)
    active: list = []
    pending = list(initial)
    while pending:
        cur = pending.pop()
        changed = True
        while changed:
            changed = False
            order = list(range(len(active)))
            if rng is not None:
                rng.shuffle(order)
            for k in order:
                other = active[k]
                if history[cur].droplet.meets(history[other].droplet):
                    merged = _finish(span(history[cur].droplet, history[other].droplet), boundary)
                    history.append(MergeNode(merged, (cur, other)))
                    cur = len(history) - 1
                    active.pop(k)
                    changed = True
                    break
        active.append(cur)
    active.sort(key=lambda i: history[i].droplet.sort_key())
    return AlgorithmResult([history[i].droplet for i in active], report, history, active)


def union_contains(droplets: Sequence[Droplet], D: Droplet) -> bool:
    return any(E.contains(D) for E in droplets)


def is_spanned(D: Droplet, K: Iterable, boundary: Optional[BoundaryRegion], modified: bool,
               fam: Optional[UpdateFamily], frame: Frame, consts: DropletConstants, alpha: int = 1) -> bool:
    inside = [p for p in K if D.contains_point(p)]
    if not inside:
        return False
    res = droplet_algorithm(inside, boundary, consts, modified, fam, frame, alpha)
    return union_contains(res.droplets, D)


# -- enumeration and Monte Carlo -------------------------------------------

def enumerate_discretised_droplets(a, d, frame: Frame, cap: int = 200000, growth_base: float = 16.0):
    """Distinct lattice sets DYD n Z^2 containing a with diameter at most d.

    Returns (count, list of frozensets). Raises SearchLimitError past ``cap``.
    """
    a = (int(a[0]), int(a[1]))
    d = F(d)
    if d < 0:
        raise DropletError("negative diameter")
    r = math.floor(d)
    ball = [(a[0] + dx, a[1] + dy) for dx in range(-r, r + 1) for dy in range(-r, r + 1)
            if dx * dx + dy * dy <= d * d]
    S = frame.dirs.S
    dots = {p: tuple(s.dot(p) for s in S) for p in ball}
    lv1 = sorted({dots[p][2] for p in ball if dots[p][2] >= dots[a][2]})
    lv2 = sorted({dots[p][3] for p in ball if dots[p][3] >= dots[a][3]})
    found = set()
    d2 = d * d
    for b1 in lv1:
        for b2 in lv2:
            W = [p for p in ball if dots[p][2] <= b1 and dots[p][3] <= b2]
            if a not in W:
                continue
            W.sort(key=lambda p: (dots[p][0], -dots[p][1]))
            n = len(W)

            def rec(start, last, chosen):
                # chosen: antichain so far (increasing u1, decreasing u2)
                if chosen:
                    L = frozenset(p for p in W if any(dots[p][0] <= dots[m][0] and dots[p][1] <= dots[m][1]
                                                       for m in chosen))
                    if a in L and L not in found and _diam2(list(L)) <= d2:
                        found.add(L)
                        if len(found) > cap:
                            raise SearchLimitError(f"too-large: more than {cap} droplets (partial count {len(found)})")
                for i in range(start, n):
                    p = W[i]
                    if last is None or (dots[p][0] > dots[last][0] and dots[p][1] < dots[last][1]):
                        rec(i + 1, p, chosen + [p])
            rec(0, None, [])
    count = len(found)
    if count > growth_base ** max(float(d), 1.0):
        raise DropletError(f"count {count} exceeds c^d with c={growth_base}")
    return count, sorted(found, key=lambda s: (len(s), sorted(s)))


@dataclass
class Estimate:
    successes: int
    trials: int
    low: float
    high: float

    @property
    def p(self) -> float:
        return self.successes / self.trials if self.trials else 0.0


def wilson(successes: int, trials: int, alpha: float = 0.05) -> Estimate:
    from statsmodels.stats.proportion import proportion_confint
    lo, hi = proportion_confint(successes, trials, alpha=alpha, method="wilson")
    return Estimate(successes, trials, float(lo), float(hi))


def estimate_spanning_probability(D: Droplet, q: float, fam: Optional[UpdateFamily], frame: Frame,
                                  consts: DropletConstants, trials: int, seed: int,
                                  boundary: Optional[BoundaryRegion] = None, modified: bool = False,
                                  alpha: int = 1) -> Estimate:
    if not 0 <= q <= 1:
        raise DropletError("q must lie in [0, 1]")
    if trials < 1:
        raise DropletError("trials must be positive")
    pts = D.lattice_points()
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(trials):
        mask = rng.random(len(pts)) < q
        K = [p for p, m in zip(pts, mask) if m]
        if K and is_spanned(D, K, boundary, modified, fam, frame, consts, alpha):
            hits += 1
    return wilson(hits, trials)
