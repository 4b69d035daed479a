"""Random droplets for property tests (exact rationals throughout)."""
from fractions import Fraction as F

from kcmdrop.droplets import CDYD, DYD, U1, U2, V1, V2


def rand_frac(rng, lo, hi, den=4):
    return F(int(rng.integers(lo * den, hi * den + 1)), den)


def random_dyd(frame, rng, spread=40, extent=30):
    c = (int(rng.integers(-spread, spread + 1)), int(rng.integers(-spread, spread + 1)))
    B1 = frame.dot(V1, c) + rand_frac(rng, 1, extent)
    B2 = frame.dot(V2, c) + rand_frac(rng, 1, extent)
    corners = []
    for _ in range(int(rng.integers(1, 4))):
        corners.append((frame.dot(U1, c) + rand_frac(rng, 1, extent), frame.dot(U2, c) + rand_frac(rng, 1, extent)))
    return DYD.build(frame, B1, B2, corners)


def random_cdyd(frame, boundary, rng, spread=40, extent=30):
    for _ in range(100):
        D = random_dyd(frame, rng, spread, extent)
        if D is None:
            continue
        C = CDYD.build(frame, boundary, D.corners)
        if C is not None:
            return C
    raise RuntimeError("no CDYD found")


def random_droplet(frame, boundary, rng, p_cut=0.3):
    if rng.random() < p_cut:
        return random_cdyd(frame, boundary, rng)
    while True:
        D = random_dyd(frame, rng)
        if D is not None:
            return D


def sample_points(D, rng, n=30):
    """Rational points near D (half-lattice plus random quarter offsets)."""
    x0, x1, y0, y1 = D.bbox
    out = []
    for _ in range(n):
        out.append((F(int(rng.integers(int(x0) * 4 - 8, int(x1) * 4 + 9)), 4),
                    F(int(rng.integers(int(y0) * 4 - 8, int(y1) * 4 + 9)), 4)))
    return out


def _cut_or_none(D, boundary):
    from kcmdrop.droplets import cut
    return cut(D, boundary)


def algebra_violations(frame, boundary, rng, cases):
    """Run the span/cut/size identities on random droplets; returns a Counter of violations."""
    from collections import Counter

    from kcmdrop.droplets import cut, span
    from kcmdrop.geometry import sum_at_least

    bad = Counter()
    for _ in range(cases):
        a, b, d = (random_droplet(frame, boundary, rng) for _ in range(3))
        s = span(a, b)
        if s != span(b, a):
            bad["commutativity"] += 1
        if span(span(a, b), d) != span(a, span(b, d)):
            bad["associativity"] += 1
        if span(a, a) != a:
            bad["idempotence"] += 1
        # both operands (cut, when the result is a CDYD) lie inside the span
        for x in (a, b):
            y = x if isinstance(s, DYD) else cut(x, boundary)
            if y is not None and not s.contains(y):
                bad["containment"] += 1
        if isinstance(a, DYD):
            if a.quad().size() != a.size():
                bad["quad size"] += 1
            if a.meets_boundary(boundary):
                ca = cut(a, boundary)
                if ca is not None and ca.is_connected() and ca.size() > a.size():
                    bad["cut size"] += 1
            if cut(cut(a, boundary), boundary) != cut(a, boundary) if cut(a, boundary) is not None else False:
                bad["cut idempotence"] += 1
        if isinstance(a, DYD) and isinstance(b, DYD):
            ca, cb = cut(a, boundary), cut(b, boundary)
            rhs = ca if cb is None else (cb if ca is None else span(ca, cb))
            if cut(s, boundary) != rhs:
                bad["cut distributivity"] += 1
        if a.meets(b) and _sized(a) and _sized(b) and _sized(s):
            if not sum_at_least(a.size(), b.size(), s.size()):
                bad["subadditivity"] += 1
    return bad


def _sized(D):
    return isinstance(D, DYD) or D.is_connected()


def size_window_gaps(sizes, lo, hi):
    """Pairs (s, t) of consecutive sizes leaving some k in [lo, hi] with no size in [k, 2k]."""
    from kcmdrop.geometry import Length
    ss = sorted(set(sizes))
    gaps = []
    for s, t in zip([None] + ss, ss + [None]):
        # k ranges over (s, inf) n [lo, hi] n (-inf, t/2)
        if lo > hi:
            break
        if s is not None and not s < hi:
            continue
        if t is not None:
            half = t.scaled(F(1, 2))
            if not lo < half or (s is not None and not s < half):
                continue
        gaps.append((s, t))
    return gaps


def al_gaps(res, consts, i):
    """Size windows [k, 2k] missed by the ancestry of output droplet i."""
    from kcmdrop.geometry import Length
    D = res.history[res.final_ids[i]].droplet
    lo = Length.rational(consts.C4 * consts.C4 / consts.C1)
    hi = D.size().scaled(1 / consts.C1)
    sizes = [res.history[j].droplet.size() for j in res.ancestry(res.final_ids[i])]
    return size_window_gaps(sizes, lo, hi)


def disjoint_clusters_in(D, clusters):
    """Greedy count of pairwise disjoint clusters inside D (a lower bound for the maximum)."""
    inside = [c for c in clusters if all(D.contains_point(p) for p in c)]
    inside.sort(key=lambda c: (len(c), sorted(c)))
    used, count = set(), 0
    for c in inside:
        if used.isdisjoint(c):
            used |= c
            count += 1
    return count
