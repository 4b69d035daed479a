"""Command-line front end.

Every subcommand writes records (CSV rows or JSON lines) carrying a
``schema_version`` field. Errors are reported as one line on stderr,
``error code=<n> kind=<name> message=<text>``, with exit codes 2 (usage),
3 (validation) and 4 (resource cap).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bootstrap, droplets, east, kcm, renorm
from .bootstrap import SiteSet
from .geometry import DirectionVector, GeometryError, Window
from .render import render_svg
from .scenario import get_family, load_scenario

SCHEMA_VERSION = 1
SEED_ENV = "KCMDROP_SEED"

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_RESOURCE = 0, 2, 3, 4


class UsageError(Exception):
    pass


class ResourceCap(Exception):
    pass


VALIDATION_ERRORS = (bootstrap.FamilyError, bootstrap.ClassificationError, bootstrap.ConfigError,
                     droplets.DropletError, renorm.ParameterError, renorm.FlipError, kcm.WindowError,
                     GeometryError, ValueError)
RESOURCE_ERRORS = (east.ResourceError, droplets.SearchLimitError, ResourceCap)


# -- seeds ------------------------------------------------------------------

def master_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def task_seeds(seed: int, n: int) -> list:
    """Per-task streams: child k of SeedSequence(seed), spawned in order."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


# -- parsing helpers ----------------------------------------------------------

def parse_window(text):
    """``WxH`` (sites [0,W) x [0,H)) or ``x0:x1,y0:y1`` (half-open)."""
    if text is None:
        return None
    try:
        if "x" in text:
            w, h = (int(v) for v in text.split("x"))
            return Window(0, w, 0, h)
        xs, ys = text.split(",")
        x0, x1 = (int(v) for v in xs.split(":"))
        y0, y1 = (int(v) for v in ys.split(":"))
        return Window(x0, x1, y0, y1)
    except ValueError:
        raise UsageError(f"bad window {text!r}; use WxH or x0:x1,y0:y1") from None


def parse_direction(text) -> DirectionVector:
    try:
        dx, dy = (int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"bad direction {text!r}; use dx,dy") from None
    return DirectionVector(dx, dy)


def read_sites(path) -> list:
    """Sites from a file (or stdin for '-'): one 'x y' or 'x,y' per line, or a JSON list of pairs."""
    if path is None:
        return []
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    text = text.strip()
    if not text:
        return []
    if text.startswith("["):
        return [(int(p[0]), int(p[1])) for p in json.loads(text)]
    out = []
    for line in text.splitlines():
        line = line.split("#")[0].strip()
        if line:
            a, b = line.replace(",", " ").split()
            out.append((int(a), int(b)))
    return out


def _plain(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def emit(records, args, out):
    records = [{"schema_version": SCHEMA_VERSION, **_plain(r)} for r in records]
    if args.format == "lines":
        if not args.no_timestamp:
            out.write(json.dumps({"schema_version": SCHEMA_VERSION, "generated": _now()}) + "\n")
        for r in records:
            out.write(json.dumps(r, sort_keys=True) + "\n")
        return
    if not args.no_timestamp:
        out.write(f"# generated {_now()}\n")
    if not records:
        return
    keys = list(records[0])
    for r in records[1:]:
        keys += [k for k in r if k not in keys]
    w = csv.DictWriter(out, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in r.items()})


def _now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# -- subcommands -------------------------------------------------------------

def cmd_classify(args):
    fam = get_family(args.family)
    rep = bootstrap.classify(fam, n_max=args.n_max)
    r = rep.as_record()
    return [{"family": fam.name or args.family, "classification": r["classification"], "alpha": r["alpha"],
             "infinite_stable": r["infinite_stable"], "balanced": r["balanced"]}]


def cmd_stable_arcs(args):
    fam = get_family(args.family)
    st = bootstrap.stable_arcs(fam)
    rows = []
    for a in st.arcs:
        if a.full:
            rows.append({"kind": "full", "start": "", "end": ""})
        else:
            rows.append({"kind": "isolated" if a.degenerate else "arc",
                         "start": f"{a.start.dx},{a.start.dy}", "end": f"{a.end.dx},{a.end.dy}"})
    for d in st.isolated:
        rows.append({"kind": "isolated", "start": f"{d.dx},{d.dy}", "end": f"{d.dx},{d.dy}"})
    return rows


def cmd_difficulty(args):
    fam = get_family(args.family)
    if args.direction is None:
        raise UsageError("difficulty needs --direction dx,dy")
    u = parse_direction(args.direction)
    d = bootstrap.difficulty_direction(fam, u, n_max=args.n_max)
    val = "inf" if d == math.inf else (repr(d) if isinstance(d, bootstrap.Unknown) else int(d))
    return [{"direction": f"{u.dx},{u.dy}", "kind": bootstrap.stable_arcs(fam).kind(u), "difficulty": val}]


def cmd_closure(args):
    fam = get_family(args.family)
    K = read_sites(args.input)
    if not K:
        return []
    win = parse_window(args.window) or Window.around(K, pad=args.pad, margin=fam.reach)
    res = bootstrap.closure(SiteSet(frozenset(K), win), fam)
    return [{"x": p[0], "y": p[1], "exact": res.exact} for p in sorted(res.sites)]


def cmd_droplets(args):
    sc = load_scenario(args.scenario)
    K = read_sites(args.input)
    bd = None if args.no_boundary else sc.boundary
    res = droplets.droplet_algorithm(K, bd, sc.consts, args.modified, sc.fam, sc.frame, sc.alpha)
    return [{"kind": D.kind, "size": float(D.size()), "record": D.to_record()} for D in res.droplets]


def cmd_span_prob(args):
    sc = load_scenario(args.scenario)
    q = args.q if args.q is not None else sc.q
    if not 0 <= q <= 1:
        raise renorm.ParameterError("q must lie in [0, 1]")
    trials = args.trials or 200
    reaches = [Fraction(r) for r in (args.reach or ["3/2", "3", "6"])]
    consts = sc.tiny_constants() if args.compact else sc.consts
    seeds = np.random.SeedSequence(master_seed(args)).spawn(len(reaches))
    rows = []
    for r, s in zip(reaches, seeds):
        D = droplets.quad_of_cluster([(0, 0)], r, sc.frame)
        est = droplets.estimate_spanning_probability(D, q, sc.fam, sc.frame, consts, trials,
                                                     int(s.generate_state(1)[0]), alpha=sc.alpha)
        rows.append({"reach": str(r), "size": float(D.size()), "sites": len(D.lattice_points()), "q": q,
                     "trials": trials, "spanned": est.successes, "estimate": est.p, "low": est.low,
                     "high": est.high})
    return rows


def cmd_east_barrier(args):
    rows = []
    for M in range(1, args.max + 1):
        b = east.east_min_barrier(M, M_cap=args.cap)
        rows.append({"M": M, "barrier": b, "log2_bound": east.log2_barrier(M), "equal": b == east.log2_barrier(M)})
    return rows


def _kcm_window(args, default="2x2"):
    return parse_window(args.window or default)


def _kcm_boundary(args, win: Window):
    # 'below': the half-plane under the window is empty, everything else occupied
    if args.boundary == "below":
        return lambda p: p[1] < win.y0
    return args.boundary


def cmd_kcm_tau(args):
    fam = get_family(args.family)
    if args.q is None:
        raise UsageError("kcm-tau needs --q")
    win = _kcm_window(args)
    sites = list(win.sites())
    bc = _kcm_boundary(args, win)
    system = kcm.KcmSystem(fam, sites, bc)
    trials = args.trials or 1000
    origin = (win.x0, win.y0)
    taus = []
    censored = 0
    for rng in task_seeds(master_seed(args), trials):
        r = kcm.simulate_kcm(fam, args.q, sites, bc, seed=rng, origin=origin, system=system,
                             horizon=args.horizon)
        taus.append(r.tau)
        censored += r.censored
    taus = np.array(taus)
    mean = float(taus.mean())
    se = float(taus.std(ddof=1) / math.sqrt(len(taus))) if len(taus) > 1 else float("nan")
    return [{"family": fam.name, "q": args.q, "window": f"{win.x1 - win.x0}x{win.y1 - win.y0}",
             "trials": trials, "mean_tau": mean, "stderr": se, "censored": censored}]


def cmd_gap(args):
    fam = get_family(args.family)
    if args.q is None:
        raise UsageError("gap needs --q")
    win = _kcm_window(args)
    sites = list(win.sites())
    if len(sites) > args.cap:
        raise ResourceCap(f"window of {len(sites)} sites exceeds gap cap {args.cap}")
    g = kcm.exact_generator_gap(fam, args.q, sites, _kcm_boundary(args, win), cap=args.cap)
    return [{"family": fam.name, "q": args.q, "window": f"{win.x1 - win.x0}x{win.y1 - win.y0}",
             "gap": g.gap, "T_rel": g.T_rel, "reducible": g.reducible, "component_size": g.component_size}]


def cmd_arrows(args):
    sc = load_scenario(args.scenario)
    geom = sc.geometry()
    engine = renorm.ArrowEngine(geom, sc.fam, sc.renorm_constants(), sc.alpha)
    if args.input is not None:
        om = [p for p in read_sites(args.input) if geom.column(p) is not None]
        prof = engine.profile(om)
        return [{"profile": prof.symbols, "up_set": list(prof.up_set), **renorm.event_flags(om, geom, engine)}]
    q = args.q if args.q is not None else sc.renorm["q"]
    trials = args.trials or 200
    res = renorm.estimate_arrow_probabilities(q, geom, engine, trials, master_seed(args), n_report=2)
    return [{"n": n, "q": q, "trials": trials, "q_eff": res["q_eff"], **res[n]} for n in (1, 2)]


def cmd_path_check(args):
    sc = load_scenario(args.scenario)
    geom = sc.geometry()
    engine = renorm.ArrowEngine(geom, sc.fam, sc.renorm_constants(), sc.alpha)
    q = args.q if args.q is not None else sc.renorm["q"]
    trials = args.trials or 100
    s1, s2 = np.random.SeedSequence(master_seed(args)).spawn(2)
    bases = max(1, trials // 10)
    ch = renorm.run_chain_checks(geom, engine, q, bases, 10, s1)
    pa = renorm.run_eta_paths(geom, engine, q, max(1, bases // 10), 10, 50, s2)
    return [{"check": "chain_flip", "cases": ch.checks, "failures": ch.failures, "changed": ch.changed},
            {"check": "eta_path", "cases": pa.checks, "failures": pa.failures, "changed": pa.changed}]


def cmd_render(args):
    """Render sites (--input), optionally the droplets they span and the V columns (--scenario)."""
    sc = load_scenario(args.scenario) if (args.scenario or args.droplets or args.columns) else None
    K = read_sites(args.input)
    ds = []
    if args.droplets:
        ds = droplets.droplet_algorithm(K, None if args.no_boundary else sc.boundary, sc.consts,
                                        args.modified, sc.fam, sc.frame, sc.alpha).droplets
    geom = sc.geometry() if args.columns else None
    return render_svg(K, ds, geom)


COMMANDS = {
    "classify": cmd_classify, "stable-arcs": cmd_stable_arcs, "difficulty": cmd_difficulty,
    "closure": cmd_closure, "droplets": cmd_droplets, "span-prob": cmd_span_prob,
    "east-barrier": cmd_east_barrier, "kcm-tau": cmd_kcm_tau, "gap": cmd_gap, "arrows": cmd_arrows,
    "path-check": cmd_path_check, "render": cmd_render,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--family", default="three-rule", help="bundled family name or family file")
    common.add_argument("--scenario", default=None, help="bundled scenario name or scenario file")
    common.add_argument("--q", type=float, default=None)
    common.add_argument("--trials", type=int, default=None)
    common.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")
    common.add_argument("--window", default=None, help="WxH or x0:x1,y0:y1")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "lines"), default="csv")
    common.add_argument("--no-timestamp", action="store_true")
    common.add_argument("--input", default=None, help="site file, '-' for stdin")

    p = _Parser(prog="kcmdrop", description="Bootstrap percolation, droplets and KCM tools.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name in ("classify", "difficulty"):
            sp.add_argument("--n-max", type=int, default=2)
        if name == "difficulty":
            sp.add_argument("--direction", default=None, help="dx,dy")
        if name == "closure":
            sp.add_argument("--pad", type=int, default=16)
        if name in ("droplets", "render"):
            sp.add_argument("--modified", action="store_true")
            sp.add_argument("--no-boundary", action="store_true")
        if name == "render":
            sp.add_argument("--droplets", action="store_true", help="draw the droplets spanned by the input")
            sp.add_argument("--columns", action="store_true", help="draw V and its columns")
        if name == "span-prob":
            sp.add_argument("--reach", action="append", help="quadrilateral reach (repeatable)")
            sp.add_argument("--compact", action="store_true", help="use the compact constants")
        if name == "east-barrier":
            sp.add_argument("--max", type=int, default=7)
            sp.add_argument("--cap", type=int, default=16)
        if name in ("kcm-tau", "gap"):
            sp.add_argument("--boundary", choices=("occupied", "empty", "below"), default="below")
            sp.add_argument("--cap", type=int, default=16)
        if name == "kcm-tau":
            sp.add_argument("--horizon", type=float, default=1e8)
    return p


def _fail(code: int, exc: BaseException) -> int:
    msg = " ".join(str(exc).split())
    sys.stderr.write(f"error code={code} kind={type(exc).__name__} message={msg}\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        result = COMMANDS[args.command](args)
        buf = io.StringIO()
        if isinstance(result, str):
            buf.write(result)
        else:
            emit(result, args, buf)
        if args.out:
            Path(args.out).write_text(buf.getvalue())
        else:
            sys.stdout.write(buf.getvalue())
        return EXIT_OK
    except UsageError as exc:
        return _fail(EXIT_USAGE, exc)
    except RESOURCE_ERRORS as exc:
        return _fail(EXIT_RESOURCE, exc)
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        return _fail(EXIT_VALIDATION, exc)
    except VALIDATION_ERRORS as exc:
        return _fail(EXIT_VALIDATION, exc)


if __name__ == "__main__":
    sys.exit(main())
