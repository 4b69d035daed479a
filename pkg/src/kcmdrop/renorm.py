"""Column renormalisation: the triangular domain, arrow variables, blocks and events.

Configurations are sets of empty (infected) sites inside V. Sites outside V
that are not in the side boundary are treated as occupied and never move.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .bootstrap import Boundary, UpdateFamily, _close, boundary_is_stable
from .droplets import (BoundaryRegion, DropletConstants, Frame, droplet_algorithm, scale, wilson)
from .geometry import HalfPlane, Window

F = Fraction
UP, DOWN = "↑", "↓"


class ParameterError(ValueError):
    """Invalid renormalisation parameters."""


class FlipError(ValueError):
    """The requested flip is not legal."""


@dataclass
class RenormGeometry:
    frame: Frame
    L: Fraction               # q_eff = exp(-L)
    width: Fraction           # column width along u'
    N: int
    arrow_L: Fraction         # droplet diameter needed for an up-arrow
    lambda0_radius: Fraction
    window: Window
    top: Fraction             # V is {<x,u'> < top} minus the sides
    n: int                    # block-count threshold used by the barrier

    def __post_init__(self):
        d = self.frame.dirs
        self.uhat = d.up.unit()
        self.apex = (-self.width / 2 * self.uhat[0], -self.width / 2 * self.uhat[1])
        self.sides = Boundary([HalfPlane(d.up1, self.apex), HalfPlane(d.up2, self.apex)])
        # integer forms: column = ceil((A - S*D) / B) with S = <up, x>
        nrm = math.isqrt(d.up.norm2)
        top_n, w_n = self.top * nrm, self.width * nrm
        D = top_n.denominator * w_n.denominator // math.gcd(top_n.denominator, w_n.denominator)
        self._ints = (d.up.dx, d.up.dy, int(top_n * D), int(w_n * D), D)
        self._sides_int = []
        for v in (d.up1, d.up2):
            t = v.dx * self.apex[0] + v.dy * self.apex[1]
            self._sides_int.append((v.dx * t.denominator, v.dy * t.denominator, t.numerator))
        self._sites = None
        self._cache: dict = {}

    # -- basic predicates ------------------------------------------------
    @property
    def q_eff(self) -> float:
        return math.exp(-float(self.L))

    @property
    def n_columns(self) -> int:
        return 2 * self.N

    def s(self, x) -> Fraction:
        return self.uhat[0] * x[0] + self.uhat[1] * x[1]

    def threshold(self, i: int) -> Fraction:
        """Lower <x,u'> level of column i (the level of H_i)."""
        return self.top - i * self.width

    def in_V(self, x) -> bool:
        return self.s(x) < self.top and not self.sides.contains(x)

    def column(self, x) -> Optional[int]:
        """Column index of a lattice site, or None outside V and the columns."""
        X, Y = x
        for a, b, t in self._sides_int:
            if a * X + b * Y < t:
                return None
        ux, uy, A, B, D = self._ints
        num = A - (ux * X + uy * Y) * D
        if num <= 0:
            return None
        i = -(-num // B)
        return i if i <= 2 * self.N else None

    def column_array(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Vectorised ``column``; 0 marks sites outside."""
        ux, uy, A, B, D = self._ints
        num = A - (ux * X + uy * Y) * D
        col = -(-num // B)
        ok = (num > 0) & (col <= 2 * self.N)
        for a, b, t in self._sides_int:
            ok &= a * X + b * Y >= t
        return np.where(ok, col, 0)

    def in_bar(self, x) -> bool:
        """x in the side boundary region."""
        return self.sides.contains(x)

    def boundary(self, i: int) -> BoundaryRegion:
        """The boundary of column i: H_i plus the two sides."""
        d = self.frame.dirs
        t = self.threshold(i)
        return BoundaryRegion(self.apex, d.up, d.up1, d.up2, (t * self.uhat[0], t * self.uhat[1]))

    @property
    def sites(self) -> list:
        """Lattice sites of V in columns 1..2N inside the window."""
        if self._sites is None:
            w = self.window
            X, Y = np.meshgrid(np.arange(w.x0, w.x1, dtype=np.int64), np.arange(w.y0, w.y1, dtype=np.int64),
                               indexing="ij")
            col = self.column_array(X.ravel(), Y.ravel())
            keep = col > 0
            self._sites = list(zip(X.ravel()[keep].tolist(), Y.ravel()[keep].tolist()))
            self._site_cols = col[keep]
        return self._sites

    def column_defined(self, i: int) -> bool:
        """Whether column i lies entirely inside the window."""
        return i not in self._undefined

    @property
    def _undefined(self) -> set:
        if "undef" not in self._cache:
            w = self.window
            big = Window(w.x0 - 1, w.x1 + 1, w.y0 - 1, w.y1 + 1)
            bad = set()
            for x in range(big.x0, big.x1):
                for y in (big.y0, big.y1 - 1):
                    c = self.column((x, y))
                    if c:
                        bad.add(c)
            for y in range(big.y0, big.y1):
                for x in (big.x0, big.x1 - 1):
                    c = self.column((x, y))
                    if c:
                        bad.add(c)
            self._cache["undef"] = bad
        return self._cache["undef"]

    def lambda0(self) -> list:
        r2 = self.lambda0_radius ** 2
        R = math.floor(self.lambda0_radius)
        return [(x, y) for x in range(-R, R + 1) for y in range(-R, R + 1)
                if x * x + y * y <= r2 and self.column((x, y)) == self.n_columns]

    def check_partition(self, sample: Optional[int] = 2000) -> bool:
        """Every window site of V lies in exactly one column (checked on a sample)."""
        pts = self.sites
        if sample is not None and len(pts) > sample:
            step = len(pts) // sample
            pts = pts[::step]
        for p in pts:
            s = self.s(p)
            hits = [i for i in range(1, self.n_columns + 1)
                    if self.threshold(i - 1) > s >= self.threshold(i)]
            if len(hits) != 1 or hits[0] != self.column(p):
                return False
        return self.column((0, 0)) == self.n_columns


def _window_for(frame: Frame, top: Fraction, width: Fraction, pad: int) -> Window:
    """Bounding box of the triangle V (apex at -width/2 u', cut at level top)."""
    d = frame.dirs
    uh = d.up.unit()
    apex = (-width / 2 * uh[0], -width / 2 * uh[1])
    # corners of the triangle: apex and the two points where the side lines hit the top line
    pts = [apex]
    for side in (d.up1, d.up2):
        sv = (F(side.dx), F(side.dy))
        p = _line_meet(uh, top, sv, sv[0] * apex[0] + sv[1] * apex[1])
        pts.append(p)
    xs = [float(p[0]) for p in pts]
    ys = [float(p[1]) for p in pts]
    return Window(math.floor(min(xs)) - pad, math.ceil(max(xs)) + pad + 1,
                  math.floor(min(ys)) - pad, math.ceil(max(ys)) + pad + 1, margin=0)


def _line_meet(n1, h1, n2, h2):
    det = n1[0] * n2[1] - n1[1] * n2[0]
    return ((h1 * n2[1] - h2 * n1[1]) / det, (n1[0] * h2 - n2[0] * h1) / det)


def build_geometry(frame: Frame, *, L=None, width=None, N=None, q=None, alpha=None, C5=None,
                   arrow_L=None, lambda0_radius=None, window: Optional[Window] = None, pad: int = 0,
                   n: Optional[int] = None) -> RenormGeometry:
    """Desk mode (L, width, N) or q-coupled mode (q, alpha, C5).

    In q-coupled mode the column width is iota/q^alpha with iota the
    least value >= 1 making width/2 * u' a lattice vector, and N is rounded
    up to an integer. In both modes the top level is placed so that the
    origin sits in the middle of the last column.
    """
    if q is not None:
        if alpha is None or C5 is None:
            raise ParameterError("q-coupled mode needs q, alpha and C5")
        q, C5 = F(q), F(C5)
        if not 0 < q < 1 or C5 <= 0 or alpha < 1:
            raise ParameterError("need 0 < q < 1, C5 > 0, alpha >= 1")
        qa = q ** alpha
        L = 1 / (C5 * qa)
        norm = math.isqrt(frame.dirs.up.norm2)
        step = 2 * qa * norm          # iota must be a multiple of this
        iota = math.ceil(F(1) / step) * step
        width = iota / qa
        logN = float(L) + math.log(float(qa) / (2 * float(iota)))
        if logN > math.log(1e6):
            raise ParameterError(f"N = exp({logN:.4g}) overflows the simulation window")
        Nf = math.exp(logN) + 0.25
        N = max(1, math.ceil(Nf - 1e-12))
        if lambda0_radius is None:
            lambda0_radius = 1 / (4 * qa)
    if L is None or width is None or N is None:
        raise ParameterError("desk mode needs L, width and N")
    L, width = F(L), F(width)
    if L <= 0:
        raise ParameterError(f"L must be positive, got {L}")
    if width <= 0:
        raise ParameterError(f"column width must be positive, got {width}")
    if int(N) != N or N < 1:
        raise ParameterError(f"N must be a positive integer, got {N}")
    N = int(N)
    top = (2 * N - F(1, 2)) * width
    if window is None:
        window = _window_for(frame, top, width, pad)
    if window.size > 5_000_000:
        raise ParameterError(f"window of {window.size} sites is too large")
    geom = RenormGeometry(frame, L, width, N, F(arrow_L) if arrow_L is not None else L,
                          F(lambda0_radius) if lambda0_radius is not None else width / 4,
                          window, top, int(n) if n is not None else math.floor(L))
    return geom


# -- arrows -------------------------------------------------------------------

@dataclass(frozen=True)
class ArrowProfile:
    arrows: tuple        # True for an up-arrow; None where undefined
    up_set: tuple

    @property
    def symbols(self) -> str:
        return "".join("?" if a is None else (UP if a else DOWN) for a in self.arrows)


@dataclass(frozen=True)
class BlockConfig:
    eta: tuple
    n: int


class ArrowEngine:
    """Arrow computations for one geometry, family and constants, with memoisation."""

    def __init__(self, geom: RenormGeometry, fam: UpdateFamily, consts: DropletConstants, alpha: int = 1):
        self.geom = geom
        self.fam = fam
        self.consts = consts
        self.alpha = alpha
        self.memo: dict = {}
        self.by_closure: dict = {}
        w = geom.window
        pad = int(math.ceil(3 * float(geom.arrow_L) + 4 * float(consts.C4p))) + fam.reach
        self.cwin = Window(w.x0 - pad, w.x1 + pad, w.y0 - pad, w.y1 + pad, margin=fam.reach)
        self._bounds = {i: geom.boundary(i) for i in range(1, geom.n_columns + 1)}
        self.truncated = 0
        ax, ay = (math.floor(v) for v in geom.apex)
        if not boundary_is_stable(self._bounds[geom.n_columns].as_boundary, fam,
                                  Window(ax - 8, ax + 9, ay - 8, ay + 9)):
            raise ParameterError("column boundary is not stable for this family")

    def spans(self, i: int, sites: frozenset) -> bool:
        """Whether [sites]_{d_i} has a modified droplet of scale >= arrow_L (see ``droplets.scale``)."""
        key = (i, sites)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if not sites:
            self.memo[key] = False
            return False
        bd = self._bounds[i]
        b = bd.as_boundary
        infected, exact = _close([p for p in sites if not b.contains(p)], self.fam, self.cwin, b,
                                 seed_boundary=False)
        if not exact:
            self.truncated += 1
        # the droplets depend on the closure only, so key the expensive part on it
        ckey = (i, frozenset(infected))
        ok = self.by_closure.get(ckey)
        if ok is None:
            res = droplet_algorithm(infected, bd, self.consts, True, self.fam, self.geom.frame, self.alpha)
            need = self.geom.arrow_L
            ok = any(scale(D) >= need for D in res.droplets)
            self.by_closure[ckey] = ok
        self.memo[key] = ok
        return ok

    def restrict(self, omega: Iterable, lo: int, hi: int) -> frozenset:
        """Sites of omega in columns lo..hi."""
        g = self.geom
        return frozenset(p for p in omega if (c := g.column(p)) is not None and lo <= c <= hi)

    def first_up_arrow(self, omega: Iterable, after: int = 0):
        g = self.geom
        omega = [p for p in omega if g.column(p) is not None]
        for i in range(after + 1, g.n_columns + 1):
            if not g.column_defined(i):
                return None
            if self.spans(i, self.restrict(omega, after + 1, i)):
                return i
        return math.inf

    def profile(self, omega: Iterable) -> ArrowProfile:
        g = self.geom
        omega = [p for p in omega if g.column(p) is not None]
        ups = []
        after = 0
        undefined_from = None
        while True:
            i = self.first_up_arrow(omega, after)
            if i is None:
                undefined_from = after + 1
                while undefined_from <= g.n_columns and g.column_defined(undefined_from):
                    undefined_from += 1
                break
            if i == math.inf:
                break
            ups.append(i)
            after = i
        arrows = []
        for k in range(1, g.n_columns + 1):
            if undefined_from is not None and k >= undefined_from:
                arrows.append(None)
            else:
                arrows.append(k in ups)
        return ArrowProfile(tuple(arrows), tuple(ups))


def first_up_arrow(omega, geom, fam, consts, engine: Optional[ArrowEngine] = None):
    eng = engine or ArrowEngine(geom, fam, consts)
    return eng.first_up_arrow(omega)


def arrow_profile(omega, geom, fam, consts, engine: Optional[ArrowEngine] = None) -> ArrowProfile:
    eng = engine or ArrowEngine(geom, fam, consts)
    return eng.profile(omega)


def eta_of(profile: ArrowProfile, n: int = 0) -> BlockConfig:
    a = profile.arrows
    eta = tuple(1 if (a[2 * k] is False and a[2 * k + 1] is False) else 0 for k in range(len(a) // 2))
    return BlockConfig(eta, n)


def in_B_n(profile: ArrowProfile, n: int) -> bool:
    if n < 0:
        raise ParameterError("n must be >= 0")
    return len(profile.up_set) >= n


def event_flags(omega, geom: RenormGeometry, engine: ArrowEngine) -> dict:
    prof = engine.profile(omega)
    down = not prof.up_set and None not in prof.arrows
    up_last = prof.arrows[-1] is True
    omega = set(omega)
    lam0_full = not any(p in omega for p in geom.lambda0())
    return {"down": down, "up_last": up_last, "good": down and lam0_full}


# -- Monte Carlo -------------------------------------------------------------

def sample_omega(geom: RenormGeometry, q: float, rng) -> frozenset:
    """Bernoulli(q) empty sites on V inside the window."""
    sites = geom.sites
    idx = np.flatnonzero(rng.random(len(sites)) < q)
    return frozenset(sites[i] for i in idx)


def sample_with_blobs(geom: RenormGeometry, q: float, rng, blobs: int = 3, blob_sites: int = 6,
                      blob_box: int = 5) -> frozenset:
    """Bernoulli(q) fill plus a few dense random blobs; exercises configurations near the arrow scale."""
    om = set(sample_omega(geom, q, rng)) if q > 0 else set()
    sites = geom.sites
    for _ in range(blobs):
        cx, cy = sites[int(rng.integers(len(sites)))]
        k = int(rng.integers(1, blob_sites + 1))
        for dx, dy in rng.integers(0, blob_box, size=(k, 2)):
            p = (cx + int(dx), cy + int(dy))
            if geom.column(p) is not None:
                om.add(p)
    return frozenset(om)


def sample_near_thresholds(geom: RenormGeometry, q: float, rng, blobs: int = 3, blob_sites: int = 4,
                           spread: int = 24, depth: float = 3.0, fam: Optional[UpdateFamily] = None) -> frozenset:
    """Bernoulli(q) fill plus short strings of sites laid just above the lower boundary of random columns.

    Droplets there are cut by the column boundary into long triangles, so a
    few extra empties along the boundary can create or destroy an up-arrow.
    With ``fam`` given, each string also gets the rule helpers of one site
    just across the boundary, which makes boundary-crossing flips likely.
    """
    om = set(sample_omega(geom, q, rng)) if q > 0 else set()
    ux, uy = geom.uhat
    ex, ey = float(-uy), float(ux)      # unit vector along the thresholds
    for _ in range(blobs):
        i = int(rng.integers(1, geom.n_columns + 1))
        t = float(geom.threshold(i))
        c = rng.uniform(-1.0, 1.0) * float(geom.width)
        k = int(rng.integers(1, blob_sites + 1))
        for _ in range(k):
            r = c + rng.uniform(0, spread)
            h = t + rng.uniform(0, depth)
            p = (round(h * float(ux) + r * ex), round(h * float(uy) + r * ey))
            if geom.column(p) is not None:
                om.add(p)
        if fam is not None:
            # helpers (in column i) of a site just below the threshold (in column i+1):
            # the column restrictions cut them off, so flipping that site can move arrows
            r = c + rng.uniform(0, spread)
            h = t - rng.uniform(0.0, 1.5)
            p = (round(h * float(ux) + r * ex), round(h * float(uy) + r * ey))
            rule = fam.rules[int(rng.integers(len(fam.rules)))]
            om.update(y for v in rule if geom.column(y := (p[0] + v[0], p[1] + v[1])) is not None)
    return frozenset(om)


def estimate_arrow_probabilities(q: float, geom: RenormGeometry, engine: ArrowEngine, trials: int, seed: int,
                                 n_report: int = 2) -> dict:
    if trials < 1:
        raise ParameterError("trials must be positive")
    rng = np.random.default_rng(seed)
    counts = [0] * (n_report + 1)
    for _ in range(trials):
        omega = sample_omega(geom, q, rng) if q > 0 else frozenset()
        k = len(engine.profile(omega).up_set)
        for n in range(1, n_report + 1):
            if k >= n:
                counts[n] += 1
    out = {"q_eff": geom.q_eff}
    for n in range(1, n_report + 1):
        est = wilson(counts[n], trials)
        out[n] = {"estimate": est.p, "low": est.low, "high": est.high, "bound": geom.q_eff ** n,
                  "below_bound": est.high <= geom.q_eff ** n}
    return out


# -- legality and the chain property ---------------------------------------------

def constraint_ok(x, omega: set, geom: RenormGeometry, fam: UpdateFamily, outside: bool = False) -> bool:
    """Constraint at x satisfied by omega plus the side boundary.

    With ``outside=True`` every site outside V counts as empty (this adds the
    region beyond the top of V to the sides).
    """
    empty_out = (lambda y: geom.column(y) is None) if outside else geom.in_bar
    for rule in fam.rules:
        if all(((y := (x[0] + v[0], x[1] + v[1])) in omega) or empty_out(y) for v in rule):
            return True
    return False


def edge_sites(geom: RenormGeometry, fam: UpdateFamily) -> list:
    """Sites of V with a rule element outside V."""
    key = ("edge", fam.rules)
    if key not in geom._cache:
        sites = geom.sites
        X = np.array([p[0] for p in sites], dtype=np.int64)
        Y = np.array([p[1] for p in sites], dtype=np.int64)
        hit = np.zeros(len(sites), dtype=bool)
        for v in fam.elements:
            hit |= geom.column_array(X + v[0], Y + v[1]) == 0
        geom._cache[key] = [sites[k] for k in np.flatnonzero(hit)]
    return geom._cache[key]


def flippable_sites(omega: set, geom: RenormGeometry, fam: UpdateFamily, outside: bool = False) -> list:
    """Sites of V whose constraint holds for omega plus the boundary (see ``constraint_ok``).

    The sides are stable, so with the sides alone every such site has a rule
    element in omega and the candidates can be generated from omega.
    """
    cand = set()
    els = fam.elements
    for p in omega:
        for v in els:
            cand.add((p[0] - v[0], p[1] - v[1]))
    if outside:
        cand.update(edge_sites(geom, fam))
    return sorted(x for x in cand if geom.column(x) is not None and constraint_ok(x, omega, geom, fam, outside))


@dataclass
class ChainVerdict:
    passed: bool
    column: int
    before: ArrowProfile
    after: ArrowProfile
    detail: str = ""


def _pattern_ok(phi: Sequence, phi2: Sequence, i: int) -> tuple:
    """Check the alternating-chain relation; phi[0] is the convention up-arrow."""
    diffs = [k for k in range(len(phi)) if phi[k] != phi2[k]]
    if not diffs:
        return True, "equal"
    j = max(diffs)
    if any(phi[k] != phi2[k] for k in range(0, i)):
        return False, f"prefix before column {i} changed"
    if j < i:
        return False, "difference before the flipped column"
    for k in range(i - 1, j + 1):
        t = k - (i - 1)
        want = (t % 2 == 0)
        want2 = (t == 0) or (t % 2 == 1)
        if phi[k] != want or phi2[k] != want2:
            return False, f"not an alternating chain at column {k}"
    return True, "chain"


def chain_flip_check(omega: Iterable, x, geom: RenormGeometry, engine: ArrowEngine) -> ChainVerdict:
    """Compare arrows before and after emptying the occupied site x."""
    omega = set(omega)
    fam = engine.fam
    i = geom.column(x)
    if i is None:
        raise FlipError(f"{x} is not in V")
    if x in omega:
        raise FlipError(f"{x} is already empty")
    if not constraint_ok(x, omega, geom, fam):
        raise FlipError(f"constraint at {x} is not satisfied")
    a = engine.profile(omega)
    b = engine.profile(omega | {x})
    if None in a.arrows or None in b.arrows:
        return ChainVerdict(True, i, a, b, "undefined columns")
    phi = (True,) + a.arrows
    phi2 = (True,) + b.arrows
    ok, why = _pattern_ok(phi, phi2, i)
    return ChainVerdict(ok, i, a, b, why)


def random_kcm_path(omega: Iterable, steps: int, geom: RenormGeometry, fam: UpdateFamily, rng,
                    outside: bool = True, edge_rate: Optional[float] = None) -> list:
    """Legal path of ``steps`` flips, each at a random flippable site.

    By default sites outside V are empty, as for paths started from omega
    with the complement of V emptied. Sites are drawn uniformly, or, with
    ``edge_rate`` set, from the sites touching the outside of V with that
    probability and from the others otherwise.
    """
    cur = set(omega)
    flip = set(flippable_sites(cur, geom, fam, outside))
    edge = set(edge_sites(geom, fam)) if edge_rate is not None else set()
    els = fam.elements
    path = [frozenset(cur)]
    for _ in range(steps):
        if not flip:
            break
        pool = flip
        if edge_rate is not None:
            inner = flip - edge
            outer = flip & edge
            pool = outer if (rng.random() < edge_rate and outer) or not inner else inner
        pool = sorted(pool)
        x = pool[int(rng.integers(len(pool)))]
        cur ^= {x}
        # only sites whose rules touch x can change status
        for v in els:
            y = (x[0] - v[0], x[1] - v[1])
            if geom.column(y) is not None and constraint_ok(y, cur, geom, fam, outside):
                flip.add(y)
            else:
                flip.discard(y)
        path.append(frozenset(cur))
    return path


def east_legal_step(a: Sequence[int], b: Sequence[int]) -> bool:
    """Single East move with eta_0 = 0 frozen (1 = occupied)."""
    diff = [k for k in range(len(a)) if a[k] != b[k]]
    if not diff:
        return True
    if len(diff) != 1:
        return False
    k = diff[0]
    return k == 0 or a[k - 1] == 0


def filtered_path(path: Sequence[frozenset], geom: RenormGeometry) -> list:
    """Drop the filling moves inside the last column, keeping all other updates.

    Sites of the last column are only ever emptied in the result, so it
    stays legal whenever the original is (emptying more sites only helps).
    """
    last = geom.n_columns
    out = [path[0]]
    cur = set(path[0])
    for a, b in zip(path, path[1:]):
        for x in a ^ b:
            if x in b:
                cur.add(x)
            elif geom.column(x) != last:
                cur.discard(x)
        out.append(frozenset(cur))
    return out


def path_is_legal(path: Sequence[frozenset], geom: RenormGeometry, fam: UpdateFamily, outside: bool = True) -> bool:
    for a, b in zip(path, path[1:]):
        d = a ^ b
        if len(d) > 1:
            return False
        if len(d) == 1:
            (x,) = d
            if geom.column(x) is None or not constraint_ok(x, set(a), geom, fam, outside):
                return False
    return True


# -- exhaustive checks on a tiny geometry -------------------------------------

@dataclass
class TinyReport:
    n_states: int
    cor_path: Optional[list]        # Omega_down -> last column up avoiding B(n+1), if any
    persist_path: Optional[list]    # Omega_g -> origin empty avoiding B(n), if any
    reachable_profiles: dict        # profile symbols seen from Omega_down, with counts
    chain_edges: int                # emptying moves checked against the chain property
    chain_failures: int
    changing_edges: int = 0         # legal moves (either direction) that change the arrows


def tiny_exhaustive(geom: RenormGeometry, engine: ArrowEngine, free: Sequence, cap: int = 20) -> TinyReport:
    """Exhaustive checks over configurations of ``free`` (other sites of V occupied, outside V empty)."""
    from .kcm import KcmSystem, reachability_avoiding

    fam = engine.fam
    if any(geom.column(p) is None for p in free):
        raise ParameterError("free sites must lie in V")
    system = KcmSystem(fam, free, lambda p: geom.column(p) is None)
    if system.n > cap:
        raise ParameterError(f"{system.n} free sites exceed the cap {cap}")
    sites = system.sites
    prof = []
    for s in range(1 << system.n):
        prof.append(engine.profile(frozenset(sites[i] for i in range(system.n) if s >> i & 1)))
    n = geom.n
    lam0 = geom.lambda0()
    # sites of Lambda_0 outside the free set are frozen occupied
    lam0_mask = sum(1 << system.index[p] for p in lam0 if p in system.index)
    down = [s for s in range(1 << system.n) if not prof[s].up_set]
    good = [s for s in down if s & lam0_mask == 0]
    o = system.index.get((0, 0))

    _, cor_path = reachability_avoiding(down, lambda s: prof[s].arrows[-1] is True,
                                        lambda s: len(prof[s].up_set) >= n + 1, system, cap)
    persist_path = None
    if o is not None:
        _, persist_path = reachability_avoiding(good, lambda s: bool(s >> o & 1),
                                                lambda s: len(prof[s].up_set) >= n, system, cap)

    # reachable set from Omega_down, and the chain property on every emptying edge
    seen = set(down)
    queue = deque(down)
    while queue:
        s = queue.popleft()
        for _, t in system.neighbours(s):
            if t not in seen:
                seen.add(t)
                queue.append(t)
    counts: dict = {}
    for s in seen:
        counts[prof[s].symbols] = counts.get(prof[s].symbols, 0) + 1
    edges = fails = changing = 0
    for s in range(1 << system.n):
        for i, t in system.neighbours(s):
            changing += prof[s].arrows != prof[t].arrows
            if s >> i & 1:
                continue
            x = sites[i]
            # the chain property assumes the constraint holds with the sides only
            if not constraint_ok(x, {sites[k] for k in range(system.n) if s >> k & 1}, geom, fam):
                continue
            edges += 1
            if not _pattern_ok((True,) + prof[s].arrows, (True,) + prof[t].arrows, geom.column(x))[0]:
                fails += 1
    return TinyReport(1 << system.n, cor_path, persist_path, counts, edges, fails, changing)


def block_free_sites(geom: RenormGeometry, columns: Sequence[int], shape=(3, 3), cap: int = 20) -> list:
    """Small blocks of sites placed at the lower edge of the given columns, on the u' axis."""
    out = []
    for i in columns:
        t = geom.threshold(i)
        cx, cy = round(t * geom.uhat[0]), round(t * geom.uhat[1])
        out += [(cx + a, cy + b) for a in range(shape[0]) for b in range(shape[1])
                if geom.column((cx + a, cy + b)) is not None]
    out = sorted(set(out))
    if len(out) > cap:
        raise ParameterError(f"{len(out)} free sites exceed the cap {cap}")
    return out


# -- randomised suites ----------------------------------------------------------

@dataclass
class SuiteReport:
    checks: int = 0
    failures: int = 0
    changed: int = 0          # checks or steps where the arrows (or eta) moved
    examples: list = field(default_factory=list)


def _near_column_edge(x, geom: RenormGeometry, r: int = 2) -> bool:
    c = geom.column(x)
    return any(geom.column((x[0] + dx, x[1] + dy)) != c for dx, dy in ((r, 0), (-r, 0), (0, r), (0, -r)))


def run_chain_checks(geom: RenormGeometry, engine: ArrowEngine, q: float, bases: int, flips: int, seed,
                     blobs: int = 3, blob_sites: int = 4, spread: int = 24) -> SuiteReport:
    """Random emptying flips, half of them drawn near a column edge, each checked by ``chain_flip_check``."""
    rng = np.random.default_rng(seed)
    rep = SuiteReport()
    for _ in range(bases):
        om = set(sample_near_thresholds(geom, q, rng, blobs, blob_sites, spread, fam=engine.fam))
        cand = [x for x in flippable_sites(om, geom, engine.fam) if x not in om]
        if not cand:
            continue
        near = [x for x in cand if _near_column_edge(x, geom)]
        for k in range(flips):
            pool = near if near and k % 2 == 0 else cand
            x = pool[int(rng.integers(len(pool)))]
            v = chain_flip_check(om, x, geom, engine)
            rep.checks += 1
            if v.before != v.after:
                rep.changed += 1
            if not v.passed:
                rep.failures += 1
                if len(rep.examples) < 5:
                    rep.examples.append((x, v.before.symbols, v.after.symbols, v.detail))
    return rep


def run_eta_paths(geom: RenormGeometry, engine: ArrowEngine, q: float, bases: int, paths: int, steps: int, seed,
                  blobs: int = 3, blob_sites: int = 4, spread: int = 24, edge_rate: float = 0.1) -> SuiteReport:
    """Random legal paths with the outside of V empty; the eta images must be legal East paths."""
    rng = np.random.default_rng(seed)
    rep = SuiteReport()
    fam = engine.fam
    for _ in range(bases):
        om = sample_near_thresholds(geom, q, rng, blobs, blob_sites, spread, fam=engine.fam)
        for _ in range(paths):
            path = random_kcm_path(om, steps, geom, fam, rng, edge_rate=edge_rate)
            etas = [eta_of(engine.profile(w)).eta for w in path]
            rep.checks += 1
            bad = [(a, b) for a, b in zip(etas, etas[1:]) if not east_legal_step(a, b)]
            rep.changed += sum(a != b for a, b in zip(etas, etas[1:]))
            if bad or not path_is_legal(path, geom, fam):
                rep.failures += 1
                if len(rep.examples) < 5:
                    rep.examples.append(bad[:1])
    return rep
