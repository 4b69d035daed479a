"""The one-dimensional East model on {1..M} with site 0 frozen empty."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class ResourceError(RuntimeError):
    """Exhaustive search above the configured cap."""


@dataclass(frozen=True)
class EastConfig:
    occupancy: tuple   # occupancy[i] is site i+1; 0 empty, 1 occupied

    def __post_init__(self):
        if len(self.occupancy) < 1:
            raise ValueError("East configuration needs M >= 1")
        if any(v not in (0, 1) for v in self.occupancy):
            raise ValueError("occupancy values must be 0 or 1")

    @classmethod
    def full(cls, M: int) -> "EastConfig":
        return cls((1,) * M)

    @property
    def M(self) -> int:
        return len(self.occupancy)

    def empty(self, x: int) -> bool:
        return x == 0 or self.occupancy[x - 1] == 0

    def flipped(self, x: int) -> "EastConfig":
        occ = list(self.occupancy)
        occ[x - 1] ^= 1
        return EastConfig(tuple(occ))

    @property
    def n_empty(self) -> int:
        return self.M - sum(self.occupancy)


def east_legal_moves(cfg: EastConfig) -> list:
    """Sites x in 1..M whose left neighbour is empty."""
    return [x for x in range(1, cfg.M + 1) if cfg.empty(x - 1)]


def is_legal_east_path(path: Sequence[EastConfig]) -> bool:
    for a, b in zip(path, path[1:]):
        diff = [i + 1 for i in range(a.M) if a.occupancy[i] != b.occupancy[i]]
        if len(diff) != 1 or not a.empty(diff[0] - 1):
            return False
    return True


def _reachable_under(M: int, budget: int, want_path: bool = False):
    # states are bitmasks of empty sites; bit i is site i+1
    target = 1 << (M - 1)
    prev = {0: None}
    queue = deque([0])
    while queue:
        s = queue.popleft()
        if s & target:
            if not want_path:
                return True, None
            path = []
            while s is not None:
                path.append(s)
                s = prev[s]
            return True, path[::-1]
        for x in range(1, M + 1):
            if x == 1 or s >> (x - 2) & 1:
                t = s ^ (1 << (x - 1))
                if t not in prev and bin(t).count("1") <= budget:
                    prev[t] = s
                    queue.append(t)
    return False, None


def east_min_barrier(M: int, M_cap: int = 16, with_path: bool = False):
    """Least k such that some legal path from all-occupied to site M empty keeps <= k empties."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if M > M_cap:
        raise ResourceError(f"M={M} exceeds the exhaustive cap {M_cap}")
    lo, hi = 1, M
    while lo < hi:
        mid = (lo + hi) // 2
        if _reachable_under(M, mid)[0]:
            hi = mid
        else:
            lo = mid + 1
    if not with_path:
        return lo
    _, masks = _reachable_under(M, lo, True)
    path = [EastConfig(tuple(0 if m >> i & 1 else 1 for i in range(M))) for m in masks]
    return lo, path


@dataclass
class EastRun:
    hit_time: Optional[float]
    censored: bool
    max_empties: int
    final: EastConfig
    steps: int


def east_simulate(M: int, q: float, horizon: float, seed: int, start: Optional[EastConfig] = None,
                  stop_on_hit: bool = True) -> EastRun:
    """Continuous-time East dynamics from all-occupied (default) until site M empties."""
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    occ = list((start or EastConfig.full(M)).occupancy)
    empties = M - sum(occ)
    max_e = empties
    t = 0.0
    hit = None
    steps = 0
    batch = 4096
    while True:
        waits = rng.exponential(1.0 / M, batch)
        sites = rng.integers(1, M + 1, batch)
        coins = rng.random(batch)
        for w, x, c in zip(waits, sites, coins):
            t += w
            if t > horizon:
                return EastRun(hit, hit is None, max_e, EastConfig(tuple(occ)), steps)
            steps += 1
            if x == 1 or occ[x - 2] == 0:
                new = 0 if c < q else 1
                if new != occ[x - 1]:
                    occ[x - 1] = new
                    empties += 1 if new == 0 else -1
                    if hit is None:
                        max_e = max(max_e, empties)
                if x == M and new == 0 and hit is None:
                    hit = t
                    if stop_on_hit:
                        return EastRun(hit, False, max_e, EastConfig(tuple(occ)), steps)


def log2_barrier(M: int) -> int:
    return math.ceil(math.log2(M + 1))
