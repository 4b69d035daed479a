"""U-bootstrap percolation: closures, stable directions, difficulty, classes."""
from __future__ import annotations

import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .geometry import (
    Arc,
    DirectionVector,
    Feature,
    GeometryError,
    HalfPlane,
    Unknown,
    Window,
    alpha_max,
    alpha_min,
    alpha_rank,
    ccw_less,
    midpoint_direction,
    pythagorean_between,
    pythagorean_from_halftan,
    semicircle_contents,
    sort_directions,
    strictly_between,
)

INF = math.inf


class FamilyError(ValueError):
    """Malformed update family."""


class ClassificationError(ValueError):
    """Operation needs a different universality class."""


class ConfigError(ValueError):
    """Invalid search or growth parameters."""


@dataclass(frozen=True)
class UpdateFamily:
    rules: tuple
    name: str = ""

    def __post_init__(self):
        rules = []
        if not self.rules:
            raise FamilyError("family has no rules")
        for i, rule in enumerate(self.rules):
            try:
                pts = tuple(sorted({(int(v[0]), int(v[1])) for v in rule}))
            except (TypeError, ValueError, IndexError) as exc:
                raise FamilyError(f"rule {i}: malformed vector ({exc})") from None
            if not pts:
                raise FamilyError(f"rule {i}: empty rule")
            if (0, 0) in pts:
                raise FamilyError(f"rule {i}: contains the origin")
            rules.append(pts)
        object.__setattr__(self, "rules", tuple(rules))

    @property
    def elements(self) -> tuple:
        return tuple(sorted({v for r in self.rules for v in r}))

    @property
    def radius(self) -> float:
        return max(math.hypot(*v) for v in self.elements)

    @property
    def reach(self) -> int:
        """L-infinity reach of the rules, the margin needed for exact closures."""
        return max(max(abs(v[0]), abs(v[1])) for v in self.elements)

    def transformed(self, m) -> "UpdateFamily":
        """Image under the integer linear map m = ((a,b),(c,d))."""
        (a, b), (c, d) = m
        return UpdateFamily(tuple(tuple((a * x + b * y, c * x + d * y) for x, y in r)
                                  for r in self.rules), self.name)

    def to_json(self) -> dict:
        return {"name": self.name, "rules": [[list(v) for v in r] for r in self.rules]}


def load_family(path) -> UpdateFamily:
    """Read a family file with a ``rules`` field (list of lists of [dx,dy])."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FamilyError(f"not valid JSON: {exc}") from None
    return family_from_dict(data)


def family_from_dict(data) -> UpdateFamily:
    if not isinstance(data, dict) or "rules" not in data:
        raise FamilyError("missing 'rules' field")
    rules = data["rules"]
    if not isinstance(rules, list):
        raise FamilyError("'rules' must be a list")
    for i, r in enumerate(rules):
        if not isinstance(r, list) or not all(isinstance(v, list) and len(v) == 2
                                              and all(isinstance(c, int) for c in v) for v in r):
            raise FamilyError(f"rule {i}: expected a list of [dx,dy] integer pairs")
    return UpdateFamily(tuple(tuple(tuple(v) for v in r) for r in rules), data.get("name", ""))


E1, E2 = (1, 0), (0, 1)
_N, _S, _W, _E = (0, 1), (0, -1), (-1, 0), (1, 0)

FAMILIES = {
    "duarte": UpdateFamily(((_N, _S), (_N, _W), (_S, _W)), "duarte"),
    "three-rule": UpdateFamily(((_W, _N), (_W, _S), (_S, _E)), "three-rule"),
    "two-neighbour": UpdateFamily(tuple(itertools.combinations((_E, _N, _W, _S), 2)), "two-neighbour"),
    "one-neighbour": UpdateFamily(((_E,), (_W,), (_N,), (_S,)), "one-neighbour"),
    "horizontal-pair": UpdateFamily((((1, 0), (-1, 0)),), "horizontal-pair"),
}


# -- boundaries and site sets ----------------------------------------------

class Boundary:
    """Union of open half-planes, used as an infinite infected region."""

    def __init__(self, halfplanes: Iterable[HalfPlane]):
        self.halfplanes = tuple(halfplanes)
        # integer thresholds: <n,p> < off  <=>  <n,p> < ceil(off) for integer p
        self._tests = tuple((h.normal.dx, h.normal.dy, math.ceil(h.offset)) for h in self.halfplanes)

    def __repr__(self):
        return f"Boundary({list(self.halfplanes)})"

    def key(self):
        return tuple((h.normal.dx, h.normal.dy, h.offset) for h in self.halfplanes)

    def contains(self, p) -> bool:
        x, y = p
        if isinstance(x, int) and isinstance(y, int):
            for a, b, t in self._tests:
                if a * x + b * y < t:
                    return True
            return False
        return any(h.contains(p) for h in self.halfplanes)

    __contains__ = contains

    def frontier(self, window: Window, reach: int) -> list:
        """Window sites outside the boundary within L-inf ``reach`` of it."""
        out = set()
        for a, b, t in self._tests:
            span = reach * (abs(a) + abs(b))
            for x in range(window.x0, window.x1):
                if b == 0:
                    v = a * x
                    if t <= v < t + span:
                        out.update((x, y) for y in range(window.y0, window.y1))
                    continue
                # t <= a x + b y < t + span
                lo_v, hi_v = t - a * x, t + span - a * x
                if b > 0:
                    ylo, yhi = -((-lo_v) // b), -((-hi_v) // b)
                else:
                    ylo, yhi = (hi_v // b) + 1, (lo_v // b) + 1
                for y in range(max(ylo, window.y0), min(yhi, window.y1)):
                    out.add((x, y))
        return [p for p in out if not self.contains(p)]


@dataclass
class SiteSet:
    sites: frozenset
    window: Window
    boundary: Optional[Boundary] = None
    exact: Optional[bool] = None

    def __post_init__(self):
        self.sites = frozenset((int(p[0]), int(p[1])) for p in self.sites)
        bad = [p for p in self.sites if p not in self.window]
        if bad:
            raise GeometryError(f"sites outside window: {sorted(bad)[:3]}")
        if self.boundary is not None:
            bad = [p for p in self.sites if self.boundary.contains(p)]
            if bad:
                raise GeometryError(f"sites inside boundary: {sorted(bad)[:3]}")

    def __len__(self):
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def __contains__(self, p):
        return p in self.sites


def _close(initial, fam: UpdateFamily, window: Window, boundary: Optional[Boundary],
           seed_boundary: bool = True):
    infected = set(initial)
    offsets = fam.elements
    rules = fam.rules
    bcontains = boundary.contains if boundary is not None else (lambda p: False)
    queue = deque()
    for p in infected:
        for r in offsets:
            queue.append((p[0] - r[0], p[1] - r[1]))
    if boundary is not None and seed_boundary:
        queue.extend(boundary.frontier(window, fam.reach))
    x0, x1, y0, y1 = window.x0, window.x1, window.y0, window.y1
    new = []
    while queue:
        p = queue.popleft()
        if p in infected or not (x0 <= p[0] < x1 and y0 <= p[1] < y1) or bcontains(p):
            continue
        px, py = p
        for rule in rules:
            ok = True
            for r in rule:
                z = (px + r[0], py + r[1])
                if z not in infected and not bcontains(z):
                    ok = False
                    break
            if ok:
                infected.add(p)
                new.append(p)
                for r in offsets:
                    queue.append((px - r[0], py - r[1]))
                break
    exact = not any(window.near_edge(p) for p in new)
    return infected, exact


def closure(K: SiteSet, fam: UpdateFamily, seed_boundary: bool = True) -> SiteSet:
    """Closure [K] inside K.window; K.boundary, if any, is permanently infected.

    The result's ``exact`` flag is set when no newly infected site lies within
    the window margin, in which case the window did not truncate the growth.
    """
    infected, exact = _close(K.sites, fam, K.window, K.boundary, seed_boundary)
    return SiteSet(frozenset(infected), K.window, K.boundary, exact)


def closure_with_boundary(K: SiteSet, boundary: Boundary, fam: UpdateFamily,
                          seed_boundary: bool = True) -> SiteSet:
    """[K]_b = [(K u b) n Z^2] minus b, computed inside K.window.

    ``seed_boundary=False`` skips the sites adjacent to the boundary alone;
    only valid when the boundary is known to be stable.
    """
    sites = frozenset(p for p in K.sites if not boundary.contains(p))
    infected, exact = _close(sites, fam, K.window, boundary, seed_boundary)
    return SiteSet(frozenset(infected), K.window, boundary, exact)


_stable_boundary_cache: dict = {}


def boundary_is_stable(boundary: Boundary, fam: UpdateFamily, window: Window) -> bool:
    """Whether the boundary alone infects nothing inside ``window``."""
    key = (boundary.key(), fam.rules, window)
    if key not in _stable_boundary_cache:
        infected, _ = _close((), fam, window, boundary, True)
        _stable_boundary_cache[key] = not infected
    return _stable_boundary_cache[key]


# -- stability -------------------------------------------------------------

def is_stable_direction(fam: UpdateFamily, u: DirectionVector) -> bool:
    """u is stable iff no rule lies inside the open half-plane {<u,x> < 0}."""
    for rule in fam.rules:
        if all(u.dx * x + u.dy * y < 0 for x, y in rule):
            return False
    return True


def j_directions(fam: UpdateFamily) -> list:
    """Directions orthogonal to some rule element, sorted counterclockwise."""
    ds = []
    for v in fam.elements:
        d = DirectionVector.of(-v[1], v[0])
        ds += [d, -d]
    return sort_directions(ds)


@dataclass
class StableSet:
    arcs: list          # nontrivial closed arcs (or one full-circle arc)
    isolated: list      # isolated stable directions

    @property
    def full(self) -> bool:
        return any(a.full for a in self.arcs)

    def contains(self, u: DirectionVector) -> bool:
        return any(a.contains(u) for a in self.arcs) or u in self.isolated

    def kind(self, u: DirectionVector) -> str:
        """'unstable', 'isolated', 'semi-isolated' or 'strongly'."""
        for a in self.arcs:
            if a.interior_contains(u):
                return "strongly"
            if a.contains(u):
                return "semi-isolated"
        if u in self.isolated:
            return "isolated"
        return "unstable"


def stable_arcs(fam: UpdateFamily) -> StableSet:
    """Maximal closed stable arcs and isolated stable directions."""
    J = j_directions(fam)
    m = len(J)
    elems = []  # (kind, direction, stable) alternating point, gap
    for i in range(m):
        a, b = J[i], J[(i + 1) % m]
        elems.append(("pt", a, is_stable_direction(fam, a)))
        mid = midpoint_direction(a, b)
        elems.append(("gap", mid, is_stable_direction(fam, mid)))
    if all(s for _, _, s in elems):
        return StableSet([Arc(J[0], J[0], full=True)], [])
    k = next(i for i, e in enumerate(elems) if not e[2])
    elems = elems[k + 1:] + elems[:k + 1]
    arcs, isolated = [], []
    run = []
    for e in elems + [("gap", None, False)]:
        if e[2]:
            run.append(e)
            continue
        if run:
            pts = [d for kind, d, _ in run if kind == "pt"]
            if len(pts) == 1 and len(run) == 1:
                isolated.append(pts[0])
            else:
                arcs.append(Arc(pts[0], pts[-1]))
            run = []
    return StableSet(arcs, isolated)


# -- difficulty -------------------------------------------------------------

@dataclass(frozen=True)
class GrowthParams:
    """Doubling widths for the growth oracle and the candidate strip depth."""

    w0: int = 16
    w_max: int = 128
    h: Optional[int] = None   # default 3 * radius * n

    def widths(self) -> list:
        if self.w0 < 2 or self.w_max <= self.w0:
            raise ConfigError("growth widths must increase (w0 >= 2, w_max > w0)")
        out, w = [], self.w0
        while w <= self.w_max:
            out.append(w)
            w *= 2
        if len(out) < 2:
            raise ConfigError("growth oracle needs at least two widths")
        return out


def growth_oracle(fam: UpdateFamily, u: DirectionVector, K: Sequence, params: GrowthParams) -> str:
    """'INFINITE', 'FINITE' or 'UNKNOWN' for |[H_u u K] minus H_u|."""
    H = Boundary([HalfPlane(u)])
    perp = u.rot90()
    prev = None
    reach = fam.reach
    for w in params.widths():
        win = Window(-w, w + 1, -w, w + 1, margin=reach)
        ks = frozenset(p for p in K if not H.contains(p))
        res = closure_with_boundary(SiteSet(ks, win), H, fam, seed_boundary=False)
        if res.exact:
            return "FINITE"
        ts = [perp.dot(p) for p in res.sites]
        cur = (len(res.sites), min(ts), max(ts))
        if prev is not None:
            if not (cur[0] > prev[0] and cur[1] < prev[1] and cur[2] > prev[2]):
                return "UNKNOWN"
        prev = cur
    return "INFINITE"


def _level_rep(u: DirectionVector, k: int):
    # a lattice point with <u,x> = k (u primitive, so it exists)
    def egcd(a, b):
        if b == 0:
            return (a, 1, 0)
        g, x, y = egcd(b, a % b)
        return (g, y, x - (a // b) * y)
    g, x, y = egcd(u.dx, u.dy)
    # g = +-1
    return (x * k * g, y * k * g)


def candidate_sets(fam: UpdateFamily, u: DirectionVector, n: int, h: int):
    """Candidate infection sets of size n near the boundary line of H_u."""
    depth = int(h * math.isqrt(u.norm2) + 1)
    reps = [_level_rep(u, k) for k in range(0, depth + 1)]
    if n == 1:
        for r in reps:
            yield (r,)
        return
    for r in reps:
        box = [(r[0] + dx, r[1] + dy) for dx in range(-h, h + 1) for dy in range(-h, h + 1)
               if (dx, dy) != (0, 0) and u.dot((r[0] + dx, r[1] + dy)) >= 0]
        for rest in itertools.combinations(box, n - 1):
            yield (r,) + rest


def difficulty_direction(fam: UpdateFamily, u: DirectionVector, n_max: int = 2,
                         growth: GrowthParams = GrowthParams(), stable: Optional[StableSet] = None):
    """Difficulty of one direction: 0, a positive integer, inf or Unknown(n_max)."""
    growth.widths()
    if n_max < 1:
        raise ConfigError("n_max must be >= 1")
    if not is_stable_direction(fam, u):
        return 0
    stable = stable or stable_arcs(fam)
    if stable.kind(u) in ("strongly", "semi-isolated"):
        return INF
    for n in range(1, n_max + 1):
        h = growth.h if growth.h is not None else int(math.ceil(3 * fam.radius * n))
        for K in candidate_sets(fam, u, n, h):
            if growth_oracle(fam, u, K, growth) == "INFINITE":
                return n
    return Unknown(n_max)


def _features(stable: StableSet, difficulties: dict) -> list:
    feats = [Feature(a, INF) for a in stable.arcs]
    feats += [Feature(Arc(d, d), difficulties[d]) for d in stable.isolated]
    return feats


def _poles(feats) -> list:
    pts = []
    for f in feats:
        if f.arc.full:
            continue
        for d in (f.arc.start, f.arc.end):
            pts += [d.rot90(), d.rot270()]
    if not pts:
        return [DirectionVector(1, 0)]
    pts = sort_directions(pts)
    out = list(pts)
    for i in range(len(pts)):
        a, b = pts[i], pts[(i + 1) % len(pts)]
        if a != b:
            out.append(midpoint_direction(a, b))
    return sort_directions(out)


def difficulty_family(fam: UpdateFamily, n_max: int = 2, growth: GrowthParams = GrowthParams(),
                      _stable=None, _diff=None):
    """inf over open semicircles of the largest difficulty inside."""
    stable = _stable or stable_arcs(fam)
    diff = _diff if _diff is not None else {
        d: difficulty_direction(fam, d, n_max, growth, stable) for d in stable.isolated}
    feats = _features(stable, diff)
    if not feats:
        return 0
    return alpha_min(semicircle_contents(feats, c) for c in _poles(feats))


@dataclass
class StabilityReport:
    stable_arcs: list
    isolated_points: list           # (direction, difficulty)
    classification: str
    alpha: object
    infinite_stable: bool
    balanced: bool
    stable: StableSet = field(repr=False, default=None)

    def difficulty(self, u: DirectionVector):
        kind = self.stable.kind(u)
        if kind == "unstable":
            return 0
        if kind == "isolated":
            return dict(self.isolated_points)[u]
        return INF

    def as_record(self) -> dict:
        a = self.alpha
        return {
            "classification": self.classification,
            "alpha": "inf" if a == INF else (repr(a) if isinstance(a, Unknown) else int(a)),
            "infinite_stable": self.infinite_stable,
            "balanced": self.balanced,
            "stable_arcs": [("full" if x.full else f"[{x.start!r},{x.end!r}]") for x in self.stable_arcs],
            "isolated": [(repr(d), "inf" if v == INF else (repr(v) if isinstance(v, Unknown) else int(v)))
                         for d, v in self.isolated_points],
        }


def classify(fam: UpdateFamily, n_max: int = 2, growth: GrowthParams = GrowthParams()) -> StabilityReport:
    stable = stable_arcs(fam)
    diff = {d: difficulty_direction(fam, d, n_max, growth, stable) for d in stable.isolated}
    alpha = difficulty_family(fam, n_max, growth, stable, diff)
    if isinstance(alpha, Unknown):
        cls = "unknown"
    elif alpha == 0:
        cls = "supercritical"
    elif alpha == INF:
        cls = "subcritical"
    else:
        cls = "critical"
    feats = _features(stable, diff)
    balanced = False
    if feats and not isinstance(alpha, Unknown):
        balanced = any(alpha_rank(semicircle_contents(feats, c, closed=True)) == alpha_rank(alpha)
                       for c in _poles(feats))
    elif not feats:
        balanced = True
    return StabilityReport(
        stable_arcs=list(stable.arcs),
        isolated_points=[(d, diff[d]) for d in stable.isolated],
        classification=cls,
        alpha=alpha,
        infinite_stable=any(not a.degenerate for a in stable.arcs),
        balanced=balanced,
        stable=stable,
    )


# -- canonical directions ---------------------------------------------------

@dataclass(frozen=True)
class CanonicalDirections:
    u1: DirectionVector
    u2: DirectionVector
    v1: DirectionVector
    v2: DirectionVector
    up: DirectionVector     # bisector of u1, u2
    up1: DirectionVector    # quarter point near u1
    up2: DirectionVector    # quarter point near u2

    @property
    def S(self) -> tuple:
        return (self.u1, self.u2, self.v1, self.v2)

    def to_json(self) -> dict:
        return {k: [getattr(self, k).dx, getattr(self, k).dy]
                for k in ("u1", "u2", "v1", "v2", "up", "up1", "up2")}

    @classmethod
    def from_json(cls, d) -> "CanonicalDirections":
        return cls(**{k: DirectionVector(*d[k]) for k in ("u1", "u2", "v1", "v2", "up", "up1", "up2")})


def _union_stable(fam, a: DirectionVector, b: DirectionVector) -> bool:
    for rule in fam.rules:
        if all(a.dot(x) < 0 or b.dot(x) < 0 for x in rule):
            return False
    return True


def selection_failures(fam: UpdateFamily, report: StabilityReport, d: CanonicalDirections) -> list:
    """Names of the direction-selection properties that ``d`` violates."""
    fails = []
    u1, u2, v1, v2 = d.S
    if not (u1 != u2 != v1 != v2 and ccw_less(u1, u2, v1) and ccw_less(u1, v1, v2)):
        fails.append("order")
    alpha = report.alpha
    for s in d.S:
        kind = report.stable.kind(s)
        if kind == "semi-isolated":
            fails.append("semi-isolated")
        if kind == "unstable" or alpha_rank(report.difficulty(s)) < alpha_rank(alpha):
            fails.append("difficulty")
    if not (u1.cross(v1) > 0 and v2.cross(u2) > 0):
        fails.append("cone")
    if not (u1.cross(u2) > 0 and u2.cross(v1) > 0 and v1.cross(v2) > 0 and v2.cross(u1) > 0):
        fails.append("hull")
    if not (u2.dx * v1.dx + u2.dy * v1.dy < 0):
        fails.append("right-angle")
    if not _union_stable(fam, u1, u2):
        fails.append("union-stable")
    r = d.up1.over(u1)
    if not (d.up.over(d.up1) == r and d.up2.over(d.up) == r and u2.over(d.up2) == r):
        fails.append("bisectors")
    if not all(s.is_pythagorean() for s in d.S + (d.up,)):
        fails.append("pythagorean")
    return fails


def _open_j_free_arcs(fam, stable: StableSet) -> list:
    """Open arcs inside the strongly stable set containing no J direction."""
    J = j_directions(fam)
    out = []
    for i in range(len(J)):
        a, b = J[i], J[(i + 1) % len(J)]
        mid = midpoint_direction(a, b)
        if stable.kind(mid) == "strongly":
            out.append((a, b))
    return out


def _shrink_toward(inner: DirectionVector, target: DirectionVector, ccw: bool, steps: int):
    """Sequence of Pythagorean directions approaching target from inner."""
    lo = inner
    for _ in range(steps):
        if ccw:
            d = pythagorean_between(lo, target)
        else:
            d = pythagorean_between(target, lo)
        yield d
        lo = d


def select_canonical_directions(report: StabilityReport, fam: UpdateFamily) -> CanonicalDirections:
    """Directions u1, u2, v1, v2 and the three interior quarter directions.

    All returned directions have integer length, and the four angles
    u1 -> up1 -> up -> up2 -> u2 are exactly equal (Gaussian-integer rotation).
    """
    if report.classification != "critical" or not report.infinite_stable:
        raise ClassificationError("needs a critical family with infinitely many stable directions")
    stable = report.stable
    alpha = report.alpha
    hard = []  # (direction, is_arc_start, is_arc_end) of difficulty >= alpha
    for a in stable.arcs:
        hard.append(a.start)
        hard.append(a.end)
    for d, v in report.isolated_points:
        if alpha_rank(v) >= alpha_rank(alpha):
            hard.append(d)
    specials = [a.start for a in stable.arcs] + [a.end for a in stable.arcs] + list(stable.isolated)
    last_fail = ["no J-free strongly stable arc"]
    for lo, hi in _open_j_free_arcs(fam, stable):
        # avoid antipodes of isolated / semi-isolated directions
        cuts = sort_directions([lo, hi] + [-s for s in specials if strictly_between(lo, -s, hi)])
        cuts = [c for c in cuts if c == lo or c == hi or strictly_between(lo, c, hi)]
        # order cuts from lo ccw
        from functools import cmp_to_key
        cuts.sort(key=cmp_to_key(lambda x, y: -1 if ccw_less(lo, x, y) else (1 if ccw_less(lo, y, x) else 0)))
        if cuts[0] != lo:
            cuts.insert(0, lo)
        pieces = [(cuts[i], cuts[i + 1]) for i in range(len(cuts) - 1)] if hi in cuts else []
        for a, b in pieces:
            if a == b:
                continue
            for attempt in _candidates_in(a, b):
                u1, r = attempt
                res = _complete(fam, report, u1, r, hard)
                if isinstance(res, CanonicalDirections):
                    return res
                last_fail = res
    raise ClassificationError(f"direction selection failed: {last_fail}")


def _small_pythagorean(limit: int = 65) -> list:
    out = set()
    for m in range(1, 9):
        for n in range(0, m):
            d = DirectionVector.of(m * m - n * n, 2 * m * n)
            if math.isqrt(d.norm2) <= limit:
                for _ in range(4):
                    out.add(d)
                    out.add(DirectionVector(d.dy, d.dx))
                    d = d.rot90()
    return sort_directions(out)


def _candidates_in(a: DirectionVector, b: DirectionVector):
    """(u1, rotation) pairs with u1 * rotation^4 inside the open arc (a, b).

    u1 is Pythagorean, so u1 * r^2 and u1 * r^4 are too for any rational r.
    Pairs are yielded by increasing size of the largest coordinate involved.
    """
    rots = [DirectionVector(p, k) for p in range(1, 9) for k in range(1, p) if math.gcd(p, k) == 1]
    pairs = []
    for u1 in _small_pythagorean():
        if not strictly_between(a, u1, b):
            continue
        for r in rots:
            w = u1
            chain = []
            for _ in range(4):
                w = w.times(r)
                chain.append(w)
            if strictly_between(u1, w, b) and all(strictly_between(a, c, b) for c in chain):
                pairs.append((max(abs(c) for c in (w.dx, w.dy)), u1, r))
    pairs.sort(key=lambda t: (t[0], t[1].dx, t[1].dy, t[2].dx, t[2].dy))
    for _, u1, r in pairs:
        yield u1, r


def _complete(fam, report, u1, r, hard):
    up1 = u1.times(r)
    up = up1.times(r)
    up2 = up.times(r)
    u2 = up2.times(r)
    stable = report.stable
    # v1': most counterclockwise hard direction in (u2, u1 + pi)
    top = -u1
    in1 = [h for h in hard if strictly_between(u2, h, top)]
    lo2 = -u2
    in2 = [h for h in hard if strictly_between(lo2, h, u1)]
    if not in1 or not in2:
        return ["v-directions"]
    v1p = in1[0]
    for h in in1[1:]:
        if ccw_less(u2, v1p, h):
            v1p = h
    v2p = in2[0]
    for h in in2[1:]:
        if ccw_less(lo2, h, v2p):
            v2p = h
    v1s = [v1p]
    if stable.kind(v1p) == "semi-isolated":
        arc = next(a for a in stable.arcs if a.end == v1p)
        v1s = list(_shrink_toward(arc.start if not arc.full else u2, v1p, True, 40))
    v2s = [v2p]
    if stable.kind(v2p) == "semi-isolated":
        arc = next(a for a in stable.arcs if a.start == v2p)
        v2s = list(_shrink_toward(arc.end, v2p, False, 40))
    fails = ["v-directions"]
    for v1 in v1s:
        for v2 in v2s:
            d = CanonicalDirections(u1, u2, v1, v2, up, up1, up2)
            fails = selection_failures(fam, report, d)
            if not fails:
                return d
    return fails
