"""Kinetically constrained models on finite windows: dynamics, paths and exact spectra."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
from scipy import linalg

from .bootstrap import Boundary, UpdateFamily


class WindowError(ValueError):
    """Site outside the window or window above a cap."""


Site = tuple
BoundarySpec = Union[str, Boundary, Callable]


def _boundary_empty(bc: BoundarySpec) -> Callable:
    """Predicate telling whether a site outside the window counts as empty."""
    if bc == "occupied":
        return lambda p: False
    if bc == "empty":
        return lambda p: True
    if isinstance(bc, Boundary):
        return bc.contains
    if callable(bc):
        return bc
    raise WindowError(f"unknown boundary condition {bc!r}")


class KcmSystem:
    """A window of sites, an update family and a boundary condition.

    Configurations are bitmasks over the sorted window sites with bit i set
    when site i is empty.
    """

    def __init__(self, fam: UpdateFamily, sites: Iterable[Site], boundary: BoundarySpec = "occupied"):
        self.fam = fam
        self.sites = tuple(sorted({(int(s[0]), int(s[1])) for s in sites}))
        if not self.sites:
            raise WindowError("empty window")
        self.index = {s: i for i, s in enumerate(self.sites)}
        self.boundary = boundary
        outside_empty = _boundary_empty(boundary)
        # per site: list of masks; the constraint holds iff one mask is fully empty
        self.rule_masks = []
        self.free = []
        for x in self.sites:
            masks = set()
            free = False
            for rule in fam.rules:
                m = 0
                ok = True
                for v in rule:
                    y = (x[0] + v[0], x[1] + v[1])
                    if y in self.index:
                        m |= 1 << self.index[y]
                    elif not outside_empty(y):
                        ok = False
                        break
                if ok:
                    if m == 0:
                        free = True
                    masks.add(m)
            self.rule_masks.append(tuple(sorted(masks)))
            self.free.append(free)

    @property
    def n(self) -> int:
        return len(self.sites)

    def constraint(self, state: int, i: int) -> bool:
        if self.free[i]:
            return True
        for m in self.rule_masks[i]:
            if state & m == m:
                return True
        return False

    def mask_of(self, empty_sites: Iterable[Site]) -> int:
        m = 0
        for s in empty_sites:
            m |= 1 << self.index[s]
        return m

    def empties(self, state: int) -> list:
        return [s for i, s in enumerate(self.sites) if state >> i & 1]

    def neighbours(self, state: int):
        for i in range(self.n):
            if self.constraint(state, i):
                yield i, state ^ (1 << i)


@dataclass
class KcmState:
    sites: tuple
    occupancy: tuple        # 0 empty, 1 occupied, aligned with sites
    boundary: BoundarySpec = "occupied"
    time: float = 0.0

    def occ(self, x: Site) -> int:
        try:
            return self.occupancy[self.sites.index(x)]
        except ValueError:
            raise WindowError(f"site {x} outside window") from None

    @classmethod
    def from_mask(cls, system: KcmSystem, state: int, time: float = 0.0) -> "KcmState":
        return cls(system.sites, tuple(0 if state >> i & 1 else 1 for i in range(system.n)),
                   system.boundary, time)

    def mask(self) -> int:
        return sum(1 << i for i, v in enumerate(self.occupancy) if v == 0)


def is_legal_flip(state: KcmState, x: Site, fam: UpdateFamily) -> bool:
    """Whether some rule translated at x is fully empty (outside sites per the boundary)."""
    if x not in state.sites:
        raise WindowError(f"site {x} outside window")
    index = {s: i for i, s in enumerate(state.sites)}
    outside_empty = _boundary_empty(state.boundary)
    for rule in fam.rules:
        ok = True
        for v in rule:
            y = (x[0] + v[0], x[1] + v[1])
            if y in index:
                if state.occupancy[index[y]] != 0:
                    ok = False
                    break
            elif not outside_empty(y):
                ok = False
                break
        if ok:
            return True
    return False


def sample_equilibrium(q: float, sites: Iterable[Site], seed, boundary: BoundarySpec = "occupied") -> KcmState:
    """Product measure: each site empty with probability q."""
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    sites = tuple(sorted(sites))
    rng = np.random.default_rng(seed)
    u = rng.random(len(sites))
    return KcmState(sites, tuple(0 if v < q else 1 for v in u), boundary)


@dataclass
class TauResult:
    tau: float
    censored: bool
    steps: int
    final: int = 0


def simulate_kcm(fam: UpdateFamily, q: float, sites: Iterable[Site], boundary: BoundarySpec = "occupied",
                 seed=None, origin: Site = (0, 0), horizon: float = 1e8, stop: str = "origin",
                 system: Optional[KcmSystem] = None, start: Optional[int] = None) -> TauResult:
    """Uniformised continuous-time dynamics from a stationary start.

    With ``stop='origin'`` returns the first time the origin is empty; with
    ``stop='horizon'`` runs to the horizon and reports the final state.
    """
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    sys_ = system or KcmSystem(fam, sites, boundary)
    rng = np.random.default_rng(seed)
    n = sys_.n
    if start is None:
        u = rng.random(n)
        state = sum(1 << i for i in range(n) if u[i] < q)
    else:
        state = start
    o = sys_.index.get(origin)
    if stop == "origin":
        if o is None:
            raise WindowError("origin outside window")
        if state >> o & 1:
            return TauResult(0.0, False, 0, state)
    t = 0.0
    steps = 0
    batch = 1024
    while True:
        waits = rng.exponential(1.0 / n, batch)
        picks = rng.integers(0, n, batch)
        coins = rng.random(batch)
        for w, i, c in zip(waits, picks, coins):
            t += w
            if t > horizon:
                return TauResult(horizon, stop == "origin", steps, state)
            steps += 1
            if sys_.constraint(state, i):
                if c < q:
                    state |= 1 << i
                    if stop == "origin" and i == o:
                        return TauResult(t, False, steps, state)
                else:
                    state &= ~(1 << i)


@dataclass
class LegalPath:
    states: list            # KcmState list
    flips: list = field(default_factory=list)

    def reversed(self) -> "LegalPath":
        return LegalPath(self.states[::-1], self.flips[::-1])


def path_is_legal(path: LegalPath, fam: UpdateFamily) -> bool:
    for a, b, x in zip(path.states, path.states[1:], path.flips):
        diff = [s for s, u, v in zip(a.sites, a.occupancy, b.occupancy) if u != v]
        if diff != [x] or not is_legal_flip(a, x, fam):
            return False
    return True


def random_legal_path(state: KcmState, steps: int, seed, fam: UpdateFamily) -> LegalPath:
    """Attempt ``steps`` uniform flips, recording the legal ones."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    sys_ = KcmSystem(fam, state.sites, state.boundary)
    rng = np.random.default_rng(seed)
    cur = state.mask()
    out = [state]
    flips = []
    for i in rng.integers(0, sys_.n, steps):
        if sys_.constraint(cur, int(i)):
            cur ^= 1 << int(i)
            out.append(KcmState.from_mask(sys_, cur))
            flips.append(sys_.sites[int(i)])
    return LegalPath(out, flips)


# -- exact spectral quantities ----------------------------------------------

def _measure(n: int, q: float) -> np.ndarray:
    k = np.array([bin(s).count("1") for s in range(1 << n)])
    return q ** k * (1 - q) ** (n - k)


def generator_matrix(system: KcmSystem, q: float) -> np.ndarray:
    """Dense generator; rate q to empty a site, 1-q to fill it, when constrained."""
    n = system.n
    N = 1 << n
    Q = np.zeros((N, N))
    for s in range(N):
        for i in range(n):
            if system.constraint(s, i):
                t = s ^ (1 << i)
                Q[s, t] = (1 - q) if s >> i & 1 else q
        Q[s, s] = -Q[s].sum()
    return Q


def component_of(system: KcmSystem, state: int) -> list:
    seen = {state}
    queue = deque([state])
    while queue:
        s = queue.popleft()
        for _, t in system.neighbours(s):
            if t not in seen:
                seen.add(t)
                queue.append(t)
    return sorted(seen)


@dataclass
class GapResult:
    T_rel: float
    gap: float
    reducible: bool
    component_size: int


def exact_generator_gap(fam: UpdateFamily, q: float, sites: Iterable[Site], boundary: BoundarySpec = "occupied",
                        cap: int = 16) -> GapResult:
    """Spectral gap of the ergodic component containing the all-empty state."""
    system = KcmSystem(fam, sites, boundary)
    if system.n > cap:
        raise WindowError(f"window of {system.n} sites exceeds gap cap {cap}")
    N = 1 << system.n
    comp = component_of(system, N - 1)
    Q = generator_matrix(system, q)[np.ix_(comp, comp)]
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    mu = _measure(system.n, q)[comp]
    d = np.sqrt(mu)
    S = (d[:, None] * Q) / d[None, :]
    S = (S + S.T) / 2
    ev = np.sort(-linalg.eigvalsh(S))
    gap = float(ev[1]) if len(ev) > 1 else float("inf")
    return GapResult(1.0 / gap if gap > 0 else float("inf"), gap, len(comp) < N, len(comp))


def variance(f: Sequence[float], q: float) -> float:
    f = np.asarray(f, dtype=float)
    n = int(round(np.log2(len(f))))
    mu = _measure(n, q)
    m = float(mu @ f)
    return float(mu @ (f - m) ** 2)


def dirichlet_form(f: Sequence[float], fam: UpdateFamily, q: float, sites: Iterable[Site],
                   boundary: BoundarySpec = "occupied", cap: int = 16) -> float:
    """sum_x mu(c_x Var_x f) over all configurations of the window."""
    system = KcmSystem(fam, sites, boundary)
    if system.n > cap:
        raise WindowError(f"window of {system.n} sites exceeds cap {cap}")
    f = np.asarray(f, dtype=float)
    n = system.n
    if len(f) != 1 << n:
        raise WindowError("function table size does not match window")
    mu = _measure(n, q)
    total = 0.0
    for s in range(1 << n):
        for i in range(n):
            if s >> i & 1:
                continue  # count each pair once, from the occupied side
            if system.constraint(s, i):
                t = s | (1 << i)
                # mu(s) + mu(t) is the weight of the pair; Var_x = q(1-q)(df)^2
                w = mu[s] + mu[t]
                total += w * q * (1 - q) * (f[t] - f[s]) ** 2
    return float(total)


# -- reachability ------------------------------------------------------------

def reachability_avoiding(start: Iterable[int], target: Callable[[int], bool], forbidden: Callable[[int], bool],
                          system: KcmSystem, cap: int = 20):
    """BFS over legal flips inside non-forbidden states.

    Returns (found, path) where path is a list of state masks or None.
    """
    if system.n > cap:
        raise WindowError(f"window of {system.n} sites exceeds reachability cap {cap}")
    prev = {}
    queue = deque()
    for s in start:
        if not forbidden(s) and s not in prev:
            prev[s] = None
            queue.append(s)
    while queue:
        s = queue.popleft()
        if target(s):
            path = []
            while s is not None:
                path.append(s)
                s = prev[s]
            return True, path[::-1]
        for _, t in system.neighbours(s):
            if t not in prev and not forbidden(t):
                prev[t] = s
                queue.append(t)
    return False, None
