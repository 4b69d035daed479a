"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
import math
import time
from fractions import Fraction as F

import numpy as np
import pytest
from scipy import stats

from kcmdrop.bootstrap import FAMILIES, SiteSet, UpdateFamily, classify, closure_with_boundary
from kcmdrop.droplets import (BoundaryRegion, DropletConstants, DYD, droplet_algorithm, estimate_spanning_probability,
                              quad_of_cluster, set_size_constant, union_contains)
from kcmdrop.east import east_min_barrier
from kcmdrop.geometry import Length, Window
from kcmdrop.kcm import KcmSystem, dirichlet_form, exact_generator_gap, simulate_kcm, variance
from kcmdrop.renorm import (ArrowEngine, estimate_arrow_probabilities, run_chain_checks, run_eta_paths,
                            tiny_exhaustive)

from dropgen import al_gaps, algebra_violations, disjoint_clusters_in
from oracles import east2_generator, east_barrier_bottleneck, fa1f_mean_tau, product_measure, reversible_gap

FA1F = FAMILIES["one-neighbour"]
EAST = UpdateFamily((((-1, 0),),), "east")
# desk constants small enough for spanning to be common (C1 >= 1 and C4^2 above a single quad's diameter)
DESK = DropletConstants(1, F(11, 10), F(6, 5), F(12, 5), F(5, 2), 5, 6)


@pytest.fixture
def verdict(capsys):
    def report(n, ok, detail=""):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return report


def below(p):
    return p[1] < 0


# 1 ---------------------------------------------------------------------------

def test_criterion_1_classification(verdict):
    t = time.time()
    want = {
        "duarte": ("critical", 1, True),
        "three-rule": ("critical", 1, True),
        "two-neighbour": ("critical", 1, False),
        "one-neighbour": ("supercritical", 0, None),
        "horizontal-pair": ("subcritical", None, None),
    }
    bad = []
    for name, (cls, alpha, inf_stable) in want.items():
        r = classify(FAMILIES[name])
        ok = r.classification == cls
        if alpha is not None:
            ok = ok and r.alpha == alpha
        if inf_stable is not None:
            ok = ok and r.infinite_stable == inf_stable
        if not ok:
            bad.append((name, r.classification, r.alpha, r.infinite_stable))
    dt = time.time() - t
    verdict(1, not bad and dt < 10, f"5 families, mismatches={bad}, {dt:.1f}s")


# 2 ---------------------------------------------------------------------------

def test_criterion_2_east_barrier(verdict):
    t = time.time()
    bad = []
    for M in range(1, 13):
        got = east_min_barrier(M)
        if got != math.ceil(math.log2(M + 1)) or got != east_barrier_bottleneck(M):
            bad.append((M, got))
    dt = time.time() - t
    verdict(2, not bad and dt < 60, f"M=1..12, mismatches={bad}, {dt:.1f}s")


# 3 ---------------------------------------------------------------------------

def test_criterion_3_droplet_algebra(frame, region, verdict):
    set_size_constant(frame, 8)
    t = time.time()
    bad = algebra_violations(frame, region, np.random.default_rng(2024), 10_000)
    dt = time.time() - t
    verdict(3, not bad and dt < 120, f"10^4 cases, violations={dict(bad)}, {dt:.1f}s")


# 4 ---------------------------------------------------------------------------

def _random_K(rng, region, n_max=12, spread=14):
    K = set()
    for _ in range(int(rng.integers(1, n_max + 1))):
        c = (int(rng.integers(-spread, spread + 1)) - 6, int(rng.integers(-spread, spread + 1)) - 6)
        for _ in range(int(rng.integers(1, 4))):
            p = (c[0] + int(rng.integers(-1, 2)), c[1] + int(rng.integers(-1, 2)))
            if region.in_lambda_interior(p):
                K.add(p)
    return sorted(K)


def _points_covered(inner, outer):
    return all(any(E.contains_point(p) for E in outer) for D in inner for p in D.lattice_points())


def test_criterion_4_canonicity(frame, region, compact, three_rule, verdict):
    rng = np.random.default_rng(4)
    order_bad = mono_bad = 0
    merges = 0
    for k in range(200):
        K = _random_K(rng, region)
        bd = region if k % 2 else None
        modified = k % 4 == 3
        runs = [droplet_algorithm(K, bd, compact, modified, three_rule, frame, order_seed=s) for s in range(10)]
        keys = [[D.sort_key() for D in r.droplets] for r in runs]
        merges += len(runs[0].history) > len(runs[0].report.clusters)
        if any(kk != keys[0] for kk in keys[1:]):
            order_bad += 1
    for k in range(200):
        K2 = _random_K(rng, region)
        K1 = [p for p in K2 if rng.random() < 0.6]
        bd = region if k % 2 else None
        D1 = droplet_algorithm(K1, bd, compact, False, three_rule, frame).droplets
        D2 = droplet_algorithm(K2, bd, compact, False, three_rule, frame).droplets
        if not _points_covered(D1, D2):
            mono_bad += 1
    verdict(4, order_bad == 0 and mono_bad == 0,
            f"200x10 orders: {order_bad} differ ({merges} inputs merged); 200 K<=K' pairs: {mono_bad} violations")


# 5 ---------------------------------------------------------------------------

def test_criterion_5_aizenman_lebowitz_extremal(frame, three_rule, verdict):
    rng = np.random.default_rng(5)
    c = DESK
    big = al_bad = ex_bad = checked = 0
    for _ in range(1000):
        m = rng.random((40, 40)) < 0.01
        K = [(int(x), int(y)) for x, y in zip(*np.nonzero(m))]
        if not K:
            continue
        res = droplet_algorithm(K, None, c, False, three_rule, frame)
        clusters = [cl.sites for cl in res.report.clusters]
        for i, D in enumerate(res.droplets):
            checked += 1
            if D.size() >= Length.rational(c.C4 * c.C4):
                big += 1
                al_bad += bool(al_gaps(res, c, i))
            n = disjoint_clusters_in(D, clusters)
            if Length.rational(n * c.C4 * c.C4) < D.diameter():
                ex_bad += 1
    verdict(5, al_bad == 0 and ex_bad == 0 and big > 0,
            f"{checked} spanned droplets ({big} with |D|>=C4^2): AL gaps={al_bad}, extremal={ex_bad}")


# 6 ---------------------------------------------------------------------------

def closure_prop_violations(scenario, consts, cases, seed):
    """Sparse K near the apex, half with a small clump; count modified droplets not covered."""
    cfg = scenario.closure_test
    R, kmax, pad = int(cfg["radius"]), int(cfg["max_sites"]), int(cfg["pad"])
    bd = scenario.boundary
    B = bd.as_boundary
    fam, fr = scenario.fam, scenario.frame
    pts = [(x, y) for x in range(-R, R + 1) for y in range(-R, R + 1) if bd.in_lambda_interior((x, y))]
    rng = np.random.default_rng(seed)
    bad = grown = 0
    for _ in range(cases):
        K = [pts[i] for i in rng.choice(len(pts), int(rng.integers(1, kmax + 1)), replace=False)]
        if rng.random() < 0.5:
            p = K[0]
            K += [q for q in ((p[0] + 1, p[1]), (p[0], p[1] + 1), (p[0] + 1, p[1] + 1), (p[0] + 2, p[1]))
                  if bd.in_lambda_interior(q)]
        Kc = closure_with_boundary(SiteSet(frozenset(K), Window.around(K, pad=pad)), B, fam)
        grown += len(Kc.sites) > len(set(K))
        D = droplet_algorithm(K, bd, consts, False, fam, fr, scenario.alpha).droplets
        Dp = droplet_algorithm(sorted(Kc.sites), bd, consts, True, fam, fr, scenario.alpha).droplets
        bad += any(not union_contains(D, x) for x in Dp)
    return bad, grown


def test_criterion_6_closure_cover(scenario, compact, verdict, capsys):
    bad, grown = closure_prop_violations(scenario, scenario.consts, 500, 6)
    diag, _ = closure_prop_violations(scenario, compact, 100, 6)
    with capsys.disabled():
        print(f"\n  tuning diagnostic: compact constants {[str(v) for v in compact.as_tuple()]}: {diag} violations in 100 cases")
    verdict(6, bad == 0, f"500 sparse K at shipped defaults: {bad} violations ({grown} with grown closure)")


# 7 ---------------------------------------------------------------------------

def test_criterion_7_spectral(verdict):
    t = time.time()
    single = [exact_generator_gap(FA1F, q, [(0, 0)], "empty").T_rel for q in (0.1, 0.5, 0.9)]
    ok1 = all(abs(v - 1) < 1e-12 for v in single)
    errs = []
    for q in (0.1, 0.3, 0.5, 0.77):
        g = exact_generator_gap(EAST, q, [(1, 0), (2, 0)], lambda p: p == (0, 0))
        Q, _ = east2_generator(q)
        errs.append(abs(g.gap - reversible_gap(Q, None)))
    ok2 = max(errs) < 1e-10
    rng = np.random.default_rng(7)
    sites = [(x, y) for x in range(2) for y in range(2)]
    slack = math.inf
    for _ in range(100):
        q = float(rng.uniform(0.05, 0.95))
        f = rng.normal(size=16) * rng.uniform(0.1, 10)
        T = exact_generator_gap(FA1F, q, sites, below).T_rel
        slack = min(slack, T * dirichlet_form(f, FA1F, q, sites, below) - variance(f, q))
    ok3 = slack >= -1e-9
    dt = time.time() - t
    verdict(7, ok1 and ok2 and ok3 and dt < 60,
            f"T_rel(single)={single}, East gap err={max(errs):.1e}, min Poincare slack={slack:.3g}, {dt:.1f}s")


# 8 ---------------------------------------------------------------------------

@pytest.mark.parametrize("shape", [(2, 2), (3, 2)])
def test_criterion_8_tau_vs_relaxation(shape, verdict):
    q = 0.3
    sites = [(x, y) for x in range(shape[0]) for y in range(shape[1])]
    T = exact_generator_gap(FA1F, q, sites, below).T_rel
    system = KcmSystem(FA1F, sites, below)
    ss = np.random.SeedSequence(8).spawn(10_000)
    taus = np.array([simulate_kcm(FA1F, q, sites, below, seed=np.random.default_rng(s), system=system).tau
                     for s in ss])
    m, se = taus.mean(), taus.std(ddof=1) / math.sqrt(len(taus))
    lower = q * (m - 3 * se)
    verdict(8, lower <= T, f"{shape[0]}x{shape[1]}: q*E(tau0)={q * m:.4f} (3-sigma low {lower:.4f}) <= T_rel={T:.4f}")


# 9 ---------------------------------------------------------------------------

def test_criterion_9_renormalisation(scenario, verdict, capsys):
    t = time.time()
    g = scenario.geometry("tiny")
    e = ArrowEngine(g, scenario.fam, scenario.tiny_constants())
    chain = run_chain_checks(g, e, 0.003, 500, 20, 90, spread=8)
    paths = run_eta_paths(g, e, 0.003, 200, 5, 30, 91, spread=8)
    gm = scenario.geometry()
    em = ArrowEngine(gm, scenario.fam, scenario.renorm_constants())
    main = run_chain_checks(gm, em, scenario.renorm["q"], 10, 20, 92)
    ex = tiny_exhaustive(g, e, scenario.tiny_free_sites())
    dt = time.time() - t
    with capsys.disabled():
        print(f"\n  flips: {chain.checks} tiny ({chain.changed} moved arrows), {main.checks} main;"
              f" paths: {paths.checks} ({paths.changed} eta steps)")
        print(f"  exhaustive: {ex.n_states} states, {ex.chain_edges} emptying moves,"
              f" {ex.changing_edges} arrow-changing moves, reachable from all-down: {ex.reachable_profiles}")
    ok = (chain.checks + main.checks >= 10_000 and chain.failures == 0 and main.failures == 0
          and paths.checks >= 1000 and paths.failures == 0
          and ex.chain_failures == 0 and ex.cor_path is None and ex.persist_path is None and dt < 600)
    verdict(9, ok, f"chain FAIL={chain.failures + main.failures}, eta FAIL={paths.failures},"
                   f" exhaustive FAIL={ex.chain_failures}, forbidden-avoiding paths="
                   f"{[ex.cor_path is not None, ex.persist_path is not None]}, {dt:.0f}s")


# 10 --------------------------------------------------------------------------

def test_criterion_10_decay(scenario, frame, compact, three_rule, verdict):
    # tuned: q and the ladder keep every rung below 2/(C5 q)
    q = 0.005
    est = [estimate_spanning_probability(quad_of_cluster([(0, 0)], r, frame), q, three_rule, frame, compact, 5000, 1)
           for r in (2, 4, 8, 16)]
    ps = [e.successes for e in est]
    ladder_ok = all(a > b for a, b in zip(ps, ps[1:]))
    g = scenario.geometry()
    e = ArrowEngine(g, scenario.fam, scenario.renorm_constants())
    res = estimate_arrow_probabilities(scenario.renorm["q"], g, e, 3000, 10)
    bn_ok = res[1]["estimate"] >= res[2]["estimate"] and res[1]["below_bound"] and res[2]["below_bound"]
    verdict(10, ladder_ok and bn_ok,
            f"spanned counts for quads of reach 2,4,8,16 (5000 fills, q={q}): {ps}; "
            f"B(1) {res[1]['estimate']:.4f} (upper {res[1]['high']:.4f} vs {res[1]['bound']:.4f}), "
            f"B(2) {res[2]['estimate']:.4f} (upper {res[2]['high']:.5f} vs {res[2]['bound']:.5f})")


# 11 --------------------------------------------------------------------------

def test_criterion_11_simulation(verdict):
    q = 0.3
    sites = [(x, y) for x in range(2) for y in range(2)]
    system = KcmSystem(FA1F, sites, below)
    want = fa1f_mean_tau(sites, below, q, (0, 0))
    ss = np.random.SeedSequence(11).spawn(10_000)
    taus = np.array([simulate_kcm(FA1F, q, sites, below, seed=np.random.default_rng(s), system=system).tau
                     for s in ss])
    m, se = taus.mean(), taus.std(ddof=1) / math.sqrt(len(taus))
    tau_ok = abs(m - want) <= 3 * se
    # final states after a run from a stationary start follow the product measure
    n_runs = 4000
    ss = np.random.SeedSequence(111).spawn(n_runs)
    finals = [simulate_kcm(FA1F, q, sites, below, seed=np.random.default_rng(s), horizon=3.0, stop="horizon",
                           system=system).final for s in ss]
    obs = np.bincount(finals, minlength=1 << system.n)
    mu = np.array([float(v) for v in product_measure(system.n, F(3, 10))])
    p = stats.chisquare(obs, mu * n_runs).pvalue
    verdict(11, tau_ok and p > 0.01,
            f"mean tau0={m:.4f} vs exact {want:.4f} (3 se={3 * se:.4f}); stationary chi-square p={p:.3f}")
