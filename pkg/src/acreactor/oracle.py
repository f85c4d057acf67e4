"""Exact solvers and simple baselines for checking reactor output on small instances."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .problems import BIG_M, AlspInstance, LandingSchedule, TspInstance, alsp_cost, schedule_runway

MAX_BRUTE_FORCE = 10
MAX_ALSP_AIRCRAFT = 8
MAX_ALSP_RUNWAYS = 2


class OracleRefused(ValueError):
    """The instance is too large to enumerate."""


@dataclass
class OracleResult:
    best_mass: float
    best_perm: tuple[int, ...]
    enumerated: int
    schedule: LandingSchedule | None = None


def brute_force_min(mass_fn: Callable[[Sequence[int]], float], n: int,
                    rotation_invariant: bool = False) -> OracleResult:
    """Exhaustive minimum of ``mass_fn`` over permutations of ``range(n)``.

    Permutations are visited in lexicographic order and only a strictly
    smaller mass replaces the incumbent, so ties go to the lexicographically
    first permutation. With ``rotation_invariant`` the first atom is pinned
    to 0, which is exact for closed tours.
    """
    if n > MAX_BRUTE_FORCE:
        raise OracleRefused(f"brute force limited to n <= {MAX_BRUTE_FORCE}, got {n}")
    if n < 1:
        raise ValueError("n must be positive")
    if rotation_invariant:
        perms = ((0,) + rest for rest in itertools.permutations(range(1, n)))
    else:
        perms = itertools.permutations(range(n))
    best_mass = float("inf")
    best_perm: tuple[int, ...] = ()
    count = 0
    for p in perms:
        count += 1
        m = mass_fn(p)
        if m < best_mass:
            best_mass, best_perm = m, p
    return OracleResult(best_mass, best_perm, count)


def held_karp(costs) -> tuple[float, tuple[int, ...]]:
    """Bellman/Held-Karp dynamic program for the optimal closed tour from city 0."""
    c = np.asarray(costs, dtype=float)
    n = c.shape[0]
    if n == 1:
        return 0.0, (0,)
    full = 1 << (n - 1)
    # dp[mask][j]: cheapest path 0 -> ... -> j+1 visiting exactly the cities in mask
    dp = np.full((full, n - 1), np.inf)
    parent = np.full((full, n - 1), -1, dtype=int)
    for j in range(n - 1):
        dp[1 << j][j] = c[0, j + 1]
    for mask in range(1, full):
        for j in range(n - 1):
            if not mask & (1 << j) or not np.isfinite(dp[mask][j]):
                continue
            base = dp[mask][j]
            for k in range(n - 1):
                if mask & (1 << k):
                    continue
                nm = mask | (1 << k)
                cand = base + c[j + 1, k + 1]
                if cand < dp[nm][k]:
                    dp[nm][k] = cand
                    parent[nm][k] = j
    last = full - 1
    totals = dp[last] + c[1:, 0]
    j = int(np.argmin(totals))
    best = float(totals[j])
    tour = []
    mask = last
    while j != -1:
        tour.append(j + 1)
        pj = parent[mask][j]
        mask ^= 1 << j
        j = pj
    return best, (0,) + tuple(reversed(tour))


def nn_tour(instance: TspInstance, start: int = 0) -> tuple[int, ...]:
    """Nearest-neighbour tour; equal distances go to the lowest city index."""
    n = instance.n
    if not 0 <= start < n:
        raise ValueError(f"start city {start} outside [0, {n})")
    c = instance.costs
    tour = [start]
    left = set(range(n)) - {start}
    while left:
        here = tour[-1]
        nxt = min(left, key=lambda j: (c[here, j], j))
        tour.append(nxt)
        left.remove(nxt)
    return tuple(tour)


def alsp_exact_small(instance: AlspInstance) -> OracleResult:
    """Cheapest schedule over every runway assignment and every landing order.

    Each runway sequence is timed exactly as the decoder times it, so this is
    the optimum of the decoder's schedule family (not of the continuous LP).
    """
    p, R = instance.n, instance.runways
    if p > MAX_ALSP_AIRCRAFT or R > MAX_ALSP_RUNWAYS:
        raise OracleRefused(f"ALSP oracle limited to {MAX_ALSP_AIRCRAFT} aircraft and "
                            f"{MAX_ALSP_RUNWAYS} runways, got {p} and {R}")
    count = 0
    # best single-runway sequence for every subset of aircraft
    best_seq: dict[int, tuple[float, tuple[int, ...]]] = {0: (0.0, ())}
    for mask in range(1, 1 << p):
        members = [i for i in range(p) if mask >> i & 1]
        best = None
        for seq in itertools.permutations(members):
            count += 1
            times = [0.0] * p
            bad = schedule_runway(instance, seq, times)
            cost = _partial_cost(instance, seq, times, bad)
            if best is None or cost < best[0]:
                best = (cost, seq)
        best_seq[mask] = best
    full = (1 << p) - 1
    if R == 1:
        parts = [(full,)]
    else:
        # aircraft 0 on runway 0 removes the mirror-image assignments
        parts = [(m, full ^ m) for m in range(1, 1 << p) if m & 1]
    best_total, best_part = None, None
    for part in parts:
        total = sum(best_seq[m][0] for m in part)
        if best_total is None or total < best_total:
            best_total, best_part = total, part
    runway_of = [0] * p
    slot = [0] * p
    for r, m in enumerate(best_part):
        for k, i in enumerate(best_seq[m][1]):
            runway_of[i] = r
            slot[i] = k
    times = [0.0] * p
    bad = sum(schedule_runway(instance, best_seq[m][1], times) for m in best_part)
    # landing order; pass it with ``runway_of`` to alsp_decode to rebuild the schedule
    order = sorted(range(p), key=lambda i: (times[i], runway_of[i], slot[i]))
    schedule = LandingSchedule(times, runway_of, bad == 0, bad, order)
    return OracleResult(alsp_cost(instance, schedule), tuple(order), count, schedule)


def _partial_cost(instance: AlspInstance, seq, times, violations: int) -> float:
    total = 0.0
    for i in seq:
        a = instance.aircraft[i]
        x = times[i]
        total += a.early_penalty * max(0.0, a.target - x) + a.late_penalty * max(0.0, x - a.target)
    return total + BIG_M * violations
