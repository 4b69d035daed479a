"""Exact planar geometry on rational directions.

Directions are primitive integer vectors, never angles. Every predicate in
this module is evaluated in integer or ``Fraction`` arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Point = tuple  # (Fraction|int, Fraction|int)


class GeometryError(ValueError):
    """Raised when a geometric precondition is violated."""


def _as_frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


@dataclass(frozen=True, order=False)
class DirectionVector:
    """Rational direction stored as a primitive integer vector."""

    dx: int
    dy: int

    def __post_init__(self):
        if not isinstance(self.dx, int) or not isinstance(self.dy, int):
            raise GeometryError("direction components must be integers")
        if self.dx == 0 and self.dy == 0:
            raise GeometryError("zero direction")
        if math.gcd(self.dx, self.dy) != 1:
            raise GeometryError(f"direction ({self.dx},{self.dy}) is not primitive")

    @classmethod
    def of(cls, dx: int, dy: int) -> "DirectionVector":
        """Reduce an arbitrary nonzero integer vector to its primitive direction."""
        dx, dy = int(dx), int(dy)
        if dx == 0 and dy == 0:
            raise GeometryError("zero direction")
        g = math.gcd(dx, dy)
        return cls(dx // g, dy // g)

    def __iter__(self):
        yield self.dx
        yield self.dy

    def __getitem__(self, i: int) -> int:
        return (self.dx, self.dy)[i]

    def __neg__(self) -> "DirectionVector":
        return DirectionVector(-self.dx, -self.dy)

    def __repr__(self) -> str:
        return f"({self.dx},{self.dy})"

    @property
    def norm2(self) -> int:
        return self.dx * self.dx + self.dy * self.dy

    def dot(self, p) -> Fraction | int:
        return self.dx * p[0] + self.dy * p[1]

    def cross(self, other: "DirectionVector") -> int:
        return self.dx * other.dy - self.dy * other.dx

    def rot90(self) -> "DirectionVector":
        return DirectionVector(-self.dy, self.dx)

    def rot270(self) -> "DirectionVector":
        return DirectionVector(self.dy, -self.dx)

    def is_pythagorean(self) -> bool:
        n = math.isqrt(self.norm2)
        return n * n == self.norm2

    def unit(self) -> tuple[Fraction, Fraction]:
        """Exact unit vector; only defined for Pythagorean directions."""
        n = math.isqrt(self.norm2)
        if n * n != self.norm2:
            raise GeometryError(f"{self!r} has irrational length")
        return (Fraction(self.dx, n), Fraction(self.dy, n))

    def times(self, other: "DirectionVector") -> "DirectionVector":
        """Complex product, i.e. rotation of self by the angle of other."""
        return DirectionVector.of(self.dx * other.dx - self.dy * other.dy,
                                  self.dx * other.dy + self.dy * other.dx)

    def over(self, other: "DirectionVector") -> "DirectionVector":
        """Direction of self * conj(other): the rotation taking other to self."""
        return DirectionVector.of(self.dx * other.dx + self.dy * other.dy,
                                  self.dy * other.dx - self.dx * other.dy)


def _half(d) -> int:
    # 0 for angles in [0, pi), 1 for [pi, 2pi)
    dx, dy = d[0], d[1]
    return 0 if (dy > 0 or (dy == 0 and dx > 0)) else 1


def circular_compare(a, b) -> int:
    """Compare counterclockwise angles from (1,0). Returns -1, 0 or 1."""
    ha, hb = _half(a), _half(b)
    if ha != hb:
        return -1 if ha < hb else 1
    c = a[0] * b[1] - a[1] * b[0]
    if c > 0:
        return -1
    if c < 0:
        return 1
    return 0


def angle_from(a: DirectionVector, x: DirectionVector) -> tuple[int, int]:
    """Integer vector whose angle equals the ccw angle from a to x."""
    return (a.dx * x.dx + a.dy * x.dy, a.dx * x.dy - a.dy * x.dx)


def ccw_less(a: DirectionVector, x: DirectionVector, y: DirectionVector) -> bool:
    """True iff the ccw angle from a to x is smaller than from a to y."""
    return circular_compare(angle_from(a, x), angle_from(a, y)) < 0


def strictly_between(a: DirectionVector, x: DirectionVector, b: DirectionVector) -> bool:
    """x lies in the open ccw arc from a to b (a == b means the circle minus a)."""
    if x == a or x == b:
        return False
    if a == b:
        return True
    return ccw_less(a, x, b)


def mediant_direction(a: DirectionVector, b: DirectionVector) -> DirectionVector:
    """Primitive reduction of a + b, strictly inside the ccw arc (a, b).

    :param a: arc start
    :param b: arc end, less than pi counterclockwise from a
    """
    if a == b or a.cross(b) <= 0:
        raise GeometryError("mediant needs a ccw arc strictly shorter than pi")
    return DirectionVector.of(a.dx + b.dx, a.dy + b.dy)


def midpoint_direction(a: DirectionVector, b: DirectionVector) -> DirectionVector:
    """Some rational direction strictly inside the ccw arc (a, b), any length."""
    if a == b:
        return -a
    c = a.cross(b)
    if c > 0:
        return mediant_direction(a, b)
    if c == 0:  # half circle
        return a.rot90()
    # reflex arc: go through the antipode of the short arc
    return -mediant_direction(b, a)


def sort_directions(ds: Iterable[DirectionVector]) -> list[DirectionVector]:
    from functools import cmp_to_key
    return sorted(set(ds), key=cmp_to_key(circular_compare))


# -- Pythagorean directions ------------------------------------------------

def pythagorean_from_halftan(t: Fraction) -> DirectionVector:
    """Direction at angle 2*atan(t); always has integer length."""
    t = _as_frac(t)
    p, q = t.numerator, t.denominator
    return DirectionVector.of(q * q - p * p, 2 * p * q)


def pythagorean_between(a: DirectionVector, b: DirectionVector, max_steps: int = 100000) -> DirectionVector:
    """A Pythagorean direction strictly inside the ccw arc (a, b).

    Walks the Stern-Brocot tree of half-angle tangents, so the first hit is
    the one with the smallest height in that tree.
    """
    if a == b:
        raise GeometryError("empty arc")
    # rotate by a quarter turn until the arc avoids the angle pi, where the
    # half-angle parametrisation has its pole
    turns = 0
    ra, rb = a, b
    while turns < 4:
        if not _arc_contains_closed(ra, DirectionVector(-1, 0), rb) and ra.cross(rb) > 0:
            break
        ra, rb = ra.rot90(), rb.rot90()
        turns += 1
    else:
        # arc at least pi long; split it
        m = midpoint_direction(a, b)
        return pythagorean_between(a, m)
    lo = (-1, 0)
    hi = (1, 0)
    steps = 0
    while steps < max_steps:
        steps += 1
        num, den = lo[0] + hi[0], lo[1] + hi[1]
        if den == 0:  # first step between -inf and +inf
            num, den = 0, 1
        d = pythagorean_from_halftan(Fraction(num, den))
        if strictly_between(ra, d, rb):
            for _ in range((4 - turns) % 4):
                d = d.rot90()
            return d
        # angles in (-pi, pi) grow with the half-angle tangent
        if circular_compare(_signed(d), _signed(ra)) <= 0:
            lo = (num, den)
        else:
            hi = (num, den)
    raise GeometryError("no Pythagorean direction found within step budget")


def _signed(d: DirectionVector) -> tuple[int, int]:
    # shift so that the order from (-1,0) exclusive matches (-pi, pi)
    return (-d.dx, -d.dy)


def _arc_contains_closed(a, x, b) -> bool:
    return x == a or x == b or strictly_between(a, x, b)


# -- half-planes -----------------------------------------------------------

@dataclass(frozen=True)
class HalfPlane:
    """Open half-plane {p : <normal, p - anchor> < 0}."""

    normal: DirectionVector
    anchor: tuple = (0, 0)

    def __post_init__(self):
        object.__setattr__(self, "anchor", (_as_frac(self.anchor[0]), _as_frac(self.anchor[1])))

    @property
    def offset(self) -> Fraction:
        return self.normal.dot(self.anchor)

    def contains(self, p) -> bool:
        return self.normal.dot(p) < self.offset


def halfplane_contains(h: HalfPlane, p) -> bool:
    return h.contains(p)


# -- arcs and semicircles --------------------------------------------------

@dataclass(frozen=True)
class Arc:
    """Closed or half-open ccw arc from start to end.

    ``full`` encodes the whole circle; ``start == end`` with ``full`` unset
    is a single direction.
    """

    start: DirectionVector
    end: DirectionVector
    closed_start: bool = True
    closed_end: bool = True
    full: bool = False

    def __post_init__(self):
        if not self.full and self.start == self.end and not (self.closed_start and self.closed_end):
            raise GeometryError("degenerate arc must be closed")

    @property
    def degenerate(self) -> bool:
        return not self.full and self.start == self.end

    def contains(self, u: DirectionVector) -> bool:
        if self.full:
            return True
        if u == self.start:
            return self.closed_start
        if u == self.end:
            return self.closed_end
        if self.degenerate:
            return False
        return strictly_between(self.start, u, self.end)

    def interior_contains(self, u: DirectionVector) -> bool:
        if self.full:
            return True
        if self.degenerate:
            return False
        return strictly_between(self.start, u, self.end)


@dataclass(frozen=True)
class Feature:
    """An annotated stable set piece: a nontrivial arc or a single direction."""

    arc: Arc
    value: object  # int, math.inf or Unknown


@dataclass(frozen=True)
class Unknown:
    """Difficulty not certified up to n_max; ranks just above n_max."""

    n_max: int

    def __repr__(self) -> str:
        return f"unknown({self.n_max})"


def alpha_rank(v) -> float:
    if isinstance(v, Unknown):
        return v.n_max + 0.5
    return float(v)


def alpha_max(values) -> object:
    best = 0
    for v in values:
        if alpha_rank(v) > alpha_rank(best):
            best = v
    return best


def alpha_min(values) -> object:
    values = list(values)
    best = values[0]
    for v in values[1:]:
        if alpha_rank(v) < alpha_rank(best):
            best = v
    return best


def _semicircle_meets(arc: Arc, c: DirectionVector, closed: bool) -> bool:
    # open semicircle {u : <c,u> < 0} is the open ccw arc (rot90 c, rot270 c)
    if arc.full:
        return True
    p, q = c.rot90(), c.rot270()

    def inside(u):
        d = c.dot((u.dx, u.dy))
        return d <= 0 if closed else d < 0

    if inside(arc.start) or inside(arc.end):
        return True
    if arc.degenerate:
        return False
    # arc starts outside; it meets iff it runs past the semicircle start p
    if closed:
        return strictly_between(arc.start, p, arc.end) or strictly_between(arc.start, q, arc.end)
    return ccw_less(arc.start, p, arc.end) and arc.end != p


def check_partition(features: Sequence[Feature]) -> None:
    """Raise if annotated features overlap."""
    full = [f for f in features if f.arc.full]
    if full and len(features) > 1:
        raise GeometryError("full-circle feature must be alone")
    for i, f in enumerate(features):
        for g in features[i + 1:]:
            a, b = f.arc, g.arc
            if a.contains(b.start) or a.contains(b.end) or b.contains(a.start) or b.contains(a.end):
                raise GeometryError(f"overlapping features {a} and {b}")


def semicircle_contents(features: Sequence[Feature], c: DirectionVector, closed: bool = False):
    """Supremum of annotations over the semicircle {u : <c,u> < 0}.

    Directions outside every feature are unstable and count as 0. With
    ``closed`` the boundary directions are included.
    """
    check_partition(features)
    return alpha_max(f.value for f in features if _semicircle_meets(f.arc, c, closed))


# -- exact lengths ---------------------------------------------------------

class Length:
    """Nonnegative real stored exactly as its square (a quadratic surd)."""

    __slots__ = ("sq",)

    def __init__(self, sq):
        sq = _as_frac(sq)
        if sq < 0:
            raise GeometryError("negative squared length")
        self.sq = sq

    @classmethod
    def rational(cls, v) -> "Length":
        v = _as_frac(v)
        if v < 0:
            raise GeometryError("negative length")
        return cls(v * v)

    def __float__(self) -> float:
        return math.sqrt(self.sq)

    def __repr__(self) -> str:
        return f"Length(sqrt({self.sq}))~{float(self):.6g}"

    def __eq__(self, other) -> bool:
        other = other if isinstance(other, Length) else Length.rational(other)
        return self.sq == other.sq

    def __hash__(self):
        return hash(self.sq)

    def __lt__(self, other) -> bool:
        other = other if isinstance(other, Length) else Length.rational(other)
        return self.sq < other.sq

    def __le__(self, other) -> bool:
        other = other if isinstance(other, Length) else Length.rational(other)
        return self.sq <= other.sq

    def __gt__(self, other) -> bool:
        return not self <= other

    def __ge__(self, other) -> bool:
        return not self < other

    def scaled(self, k) -> "Length":
        k = _as_frac(k)
        return Length(self.sq * k * k)

    def is_rational(self) -> bool:
        n, d = self.sq.numerator, self.sq.denominator
        return math.isqrt(n) ** 2 == n and math.isqrt(d) ** 2 == d


def sum_at_least(a: Length, b: Length, c: Length) -> bool:
    """Exact test of a + b >= c."""
    s = c.sq - a.sq - b.sq
    if s <= 0:
        return True
    return s * s <= 4 * a.sq * b.sq


# -- windows ---------------------------------------------------------------

@dataclass(frozen=True)
class Window:
    """Half-open integer rectangle [x0,x1) x [y0,y1) with an exactness margin."""

    x0: int
    x1: int
    y0: int
    y1: int
    margin: int = 0

    def __post_init__(self):
        if self.x1 <= self.x0 or self.y1 <= self.y0:
            raise GeometryError("empty window")
        if self.margin < 0:
            raise GeometryError("negative margin")

    def __contains__(self, p) -> bool:
        return self.x0 <= p[0] < self.x1 and self.y0 <= p[1] < self.y1

    def near_edge(self, p) -> bool:
        m = self.margin
        return (p[0] < self.x0 + m or p[0] >= self.x1 - m
                or p[1] < self.y0 + m or p[1] >= self.y1 - m)

    @property
    def size(self) -> int:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def sites(self):
        for x in range(self.x0, self.x1):
            for y in range(self.y0, self.y1):
                yield (x, y)

    @classmethod
    def around(cls, pts, pad: int, margin: int = 0) -> "Window":
        pts = list(pts)
        if not pts:
            return cls(-pad, pad + 1, -pad, pad + 1, margin)
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        return cls(math.floor(min(xs)) - pad, math.ceil(max(xs)) + pad + 1,
                   math.floor(min(ys)) - pad, math.ceil(max(ys)) + pad + 1, margin)


def solve2(n1, h1, n2, h2):
    """Intersection of the lines <n1,p> = h1 and <n2,p> = h2, or None."""
    det = n1[0] * n2[1] - n1[1] * n2[0]
    if det == 0:
        return None
    x = (h1 * n2[1] - h2 * n1[1]) / _as_frac(det)
    y = (n1[0] * h2 - n2[0] * h1) / _as_frac(det)
    return (x, y)


def dist2(p, q) -> Fraction:
    dx = _as_frac(p[0]) - q[0]
    dy = _as_frac(p[1]) - q[1]
    return dx * dx + dy * dy
