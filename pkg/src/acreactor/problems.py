"""Problem families hosted by the reactor and their mass (objective) functions.

Every instance exposes ``n`` (number of atoms) and ``mass(perm)``; the
reactor never needs to know which family it is working on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

BIG_M = 1.0e7

PRESENT, ABSENT, UNKNOWN = 1, 0, 2


class ContractViolation(ValueError):
    """Raised when an operation is called outside its precondition."""


def check_permutation(perm: Sequence[int], n: int) -> None:
    if len(perm) != n or set(perm) != set(range(n)):
        raise ContractViolation(f"not a permutation of range({n}): {tuple(perm)!r}")


# --------------------------------------------------------------------------
# Traveling salesman
# --------------------------------------------------------------------------


@dataclass(eq=False)
class TspInstance:
    costs: np.ndarray
    symmetric: bool = False
    name: str = "tsp"
    coords: np.ndarray | None = None
    scale: float = 1.0

    kind = "tsp"

    def __post_init__(self) -> None:
        self.costs = np.asarray(self.costs, dtype=float)
        c = self.costs
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 2:
            raise ValueError(f"cost matrix must be square with n >= 2, got {c.shape}")
        if np.any(np.diag(c) != 0):
            raise ValueError("cost matrix diagonal must be zero")
        if np.any(c < 0):
            raise ValueError("costs must be nonnegative")
        if self.symmetric and not np.array_equal(c, c.T):
            raise ValueError("instance flagged symmetric but matrix is not")
        # row lists make the pure-python tour sum several times faster than numpy
        self._rows = c.tolist()

    @property
    def n(self) -> int:
        return self.costs.shape[0]

    def mass(self, perm: Sequence[int]) -> float:
        rows = self._rows
        total = rows[perm[-1]][perm[0]]
        prev = perm[0]
        for city in perm[1:]:
            total += rows[prev][city]
            prev = city
        return total

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TspInstance):
            return NotImplemented
        return (
            self.symmetric == other.symmetric
            and self.name == other.name
            and np.array_equal(self.costs, other.costs)
        )


def tsp_cost(instance: TspInstance, perm: Sequence[int]) -> float:
    """Closed-tour cost, including the return edge from the last city to the first."""
    check_permutation(perm, instance.n)
    return instance.mass(perm)


# --------------------------------------------------------------------------
# Aircraft landing
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Aircraft:
    earliest: float
    target: float
    latest: float
    early_penalty: float
    late_penalty: float
    appearance: float = 0.0


@dataclass(eq=False)
class AlspInstance:
    aircraft: list[Aircraft]
    sep: np.ndarray
    runways: int = 1
    name: str = "alsp"
    freeze_time: float = 0.0

    kind = "alsp"

    def __post_init__(self) -> None:
        p = len(self.aircraft)
        if p < 1:
            raise ValueError("ALSP instance needs at least one aircraft")
        self.sep = np.asarray(self.sep, dtype=float)
        if self.sep.shape != (p, p):
            raise ValueError(f"separation matrix must be {p}x{p}, got {self.sep.shape}")
        if self.runways < 1:
            raise ValueError(f"runway count must be positive, got {self.runways}")
        for i, a in enumerate(self.aircraft):
            if not a.earliest <= a.target <= a.latest:
                raise ValueError(f"aircraft {i}: need earliest <= target <= latest, got "
                                 f"{a.earliest}, {a.target}, {a.latest}")
            if a.early_penalty < 0 or a.late_penalty < 0:
                raise ValueError(f"aircraft {i}: penalty coefficients must be nonnegative")
        if np.any(np.delete(self.sep.ravel(), np.arange(p) * (p + 1)) < 0):
            raise ValueError("separation times must be nonnegative")
        # OR-Library files put 99999 on the diagonal; it never applies to one aircraft
        self.sep[np.arange(p), np.arange(p)] = 0.0
        self._sep = self.sep.tolist()

    @property
    def n(self) -> int:
        return len(self.aircraft)

    def mass(self, perm: Sequence[int]) -> float:
        return alsp_cost(self, alsp_decode(self, perm))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AlspInstance):
            return NotImplemented
        return (
            self.aircraft == other.aircraft
            and self.runways == other.runways
            and np.array_equal(self.sep, other.sep)
        )


@dataclass
class LandingSchedule:
    times: list[float]
    runway_of: list[int]
    feasible: bool = True
    violations: int = 0
    order: list[int] = field(default_factory=list)


class _Block:
    """Aircraft landing back to back at minimum separation, moved as one unit."""

    __slots__ = ("members", "offsets", "lo", "hi", "start")

    def __init__(self, members, offsets, lo, hi):
        self.members = members
        self.offsets = offsets
        self.lo = lo
        self.hi = hi
        self.start = 0.0

    def end(self) -> float:
        return self.start + self.offsets[-1]


def _best_start(block: _Block, aircraft: list[Aircraft]) -> float:
    # Cost is convex piecewise linear in the start, with breakpoints at
    # target - offset. Take the latest minimiser (closest to landing on
    # target), then clip to the block's window.
    if block.lo > block.hi:
        return block.lo
    points = sorted(
        (aircraft[k].target - off, aircraft[k].early_penalty, aircraft[k].late_penalty)
        for k, off in zip(block.members, block.offsets)
    )
    late_below = 0.0
    early_from = sum(p[1] for p in points)
    best = points[0][0]
    for bp, g, h in points:
        # points are sorted, so accumulators give the slope just left of bp
        if late_below - early_from > 0:
            break
        best = bp
        late_below += h
        early_from -= g
    else:
        if late_below <= 0:  # flat to the right: no lateness is ever charged
            best = block.hi
    return min(max(best, block.lo), block.hi)


def _time_runway(instance: AlspInstance, seq: list[int]) -> dict[int, float]:
    """Cost-optimal landing times for a fixed landing sequence on one runway.

    Consecutive landings are linked by their separation; aircraft whose
    preferred times collide are merged into blocks and each block is slid to
    the start minimising its summed earliness/lateness penalty.
    """
    ac = instance.aircraft
    sep = instance._sep
    stack: list[_Block] = []
    for j in seq:
        a = ac[j]
        block = _Block([j], [0.0], a.earliest, a.latest)
        block.start = _best_start(block, ac)
        while stack:
            prev = stack[-1]
            gap = sep[prev.members[-1]][block.members[0]]
            if block.start >= prev.end() + gap:
                break
            stack.pop()
            shift = prev.offsets[-1] + gap
            members = prev.members + block.members
            offsets = prev.offsets + [shift + off for off in block.offsets]
            lo = max(prev.lo, block.lo - shift)
            hi = min(prev.hi, block.hi - shift)
            block = _Block(members, offsets, lo, hi)
            block.start = _best_start(block, ac)
        stack.append(block)
    times = {}
    for block in stack:
        for k, off in zip(block.members, block.offsets):
            times[k] = block.start + off
    return times


def schedule_runway(instance: AlspInstance, seq: Sequence[int], times: list[float]) -> int:
    """Write landing times for one runway's sequence into ``times``.

    Returns how many aircraft could not land inside their window.
    """
    ac = instance.aircraft
    sep = instance._sep
    t = _time_runway(instance, list(seq))
    violations = 0
    placed: list[int] = []
    for j in seq:
        x = t[j]
        # separation from every earlier landing on the runway, not only the
        # immediate predecessor (matters without the triangle inequality)
        for k in placed:
            x = max(x, times[k] + sep[k][j])
        if x > ac[j].latest:
            violations += 1
            x = ac[j].latest
        times[j] = x
        placed.append(j)
    return violations


def assign_runways(instance: AlspInstance, perm: Sequence[int]) -> list[int]:
    """Greedy runway choice: each aircraft, in ``perm`` order, goes where it can land soonest."""
    ac = instance.aircraft
    sep = instance._sep
    R = instance.runways
    last: list[tuple[int, float] | None] = [None] * R
    runway_of = [0] * instance.n
    for i in perm:
        a = ac[i]
        best_r, best_x = 0, None
        for r in range(R):
            x = a.earliest if last[r] is None else max(a.earliest, last[r][1] + sep[last[r][0]][i])
            if best_x is None or x < best_x:
                best_r, best_x = r, x
        x = best_x
        if x < a.target:
            x = min(a.target, a.latest)
        last[best_r] = (i, x)
        runway_of[i] = best_r
    return runway_of


def alsp_decode(instance: AlspInstance, perm: Sequence[int],
                runway_of: Sequence[int] | None = None) -> LandingSchedule:
    """Turn a landing order into runway assignments and landing times.

    Aircraft are taken in ``perm`` order. Unless ``runway_of`` fixes the
    assignment, each goes to the runway where it can land soonest
    (``max(earliest, last landing there + separation)``, lowest index on
    ties) under delay-to-target timing. Each runway's sequence is then
    re-timed optimally, which lets aircraft land early when that lowers the
    total penalty.
    """
    check_permutation(perm, instance.n)
    if runway_of is None:
        runway_of = assign_runways(instance, perm)
    elif len(runway_of) != instance.n or not all(0 <= r < instance.runways for r in runway_of):
        raise ContractViolation("runway assignment must give a valid runway per aircraft")
    seqs: list[list[int]] = [[] for _ in range(instance.runways)]
    for i in perm:
        seqs[runway_of[i]].append(i)
    times = [0.0] * instance.n
    violations = sum(schedule_runway(instance, seq, times) for seq in seqs)
    return LandingSchedule(times=times, runway_of=list(runway_of), feasible=violations == 0,
                           violations=violations, order=list(perm))


def alsp_cost(instance: AlspInstance, schedule: LandingSchedule) -> float:
    """Weighted earliness plus lateness, plus ``BIG_M`` per aircraft that missed its window."""
    if len(schedule.times) != instance.n:
        raise ContractViolation(
            f"schedule has {len(schedule.times)} landings, instance has {instance.n} aircraft")
    total = 0.0
    for a, x in zip(instance.aircraft, schedule.times):
        if x < a.target:
            total += a.early_penalty * (a.target - x)
        else:
            total += a.late_penalty * (x - a.target)
    return float(total + BIG_M * schedule.violations)


def schedule_violations(instance: AlspInstance, schedule: LandingSchedule) -> list[str]:
    """Describe every window or same-runway separation breach in ``schedule``."""
    out = []
    ac = instance.aircraft
    for i, x in enumerate(schedule.times):
        if not ac[i].earliest <= x <= ac[i].latest:
            out.append(f"aircraft {i} lands at {x} outside [{ac[i].earliest}, {ac[i].latest}]")
    for i in range(instance.n):
        for j in range(instance.n):
            if i == j or schedule.runway_of[i] != schedule.runway_of[j]:
                continue
            xi, xj = schedule.times[i], schedule.times[j]
            if xi < xj or (xi == xj and i < j):
                if xj < xi + instance.sep[i, j] - 1e-9:
                    out.append(f"aircraft {j} lands {xj - xi} after {i}, needs {instance.sep[i, j]}")
    return out


# --------------------------------------------------------------------------
# Radiation hybrid panels
# --------------------------------------------------------------------------


@dataclass(eq=False)
class RhPanel:
    cells: np.ndarray
    names: list[str] | None = None
    name: str = "rh"

    kind = "rh"

    def __post_init__(self) -> None:
        self.cells = np.asarray(self.cells, dtype=np.int8)
        if self.cells.ndim != 2:
            raise ValueError("RH panel must be a markers x hybrids matrix")
        m, _ = self.cells.shape
        if m < 2:
            raise ValueError(f"RH panel needs at least 2 markers, got {m}")
        if not np.isin(self.cells, (PRESENT, ABSENT, UNKNOWN)).all():
            raise ValueError("RH cells must be 0 (absent), 1 (present) or 2 (unknown)")
        typed = (self.cells != UNKNOWN).any(axis=1)
        if not typed.all():
            raise ValueError(f"marker {int(np.argmin(typed))} has no typed hybrid")
        if self.names is None:
            self.names = [f"M{i + 1}" for i in range(m)]
        elif len(self.names) != m:
            raise ValueError("one name per marker required")
        # pairwise break counts, so the mass is a sum over adjacent lookups
        present = (self.cells == PRESENT).astype(np.int32)
        absent = (self.cells == ABSENT).astype(np.int32)
        pair = present @ absent.T
        self.pair_breaks = pair + pair.T
        self._pb = self.pair_breaks.tolist()

    @property
    def markers(self) -> int:
        return self.cells.shape[0]

    @property
    def hybrids(self) -> int:
        return self.cells.shape[1]

    @property
    def n(self) -> int:
        return self.markers

    def mass(self, perm: Sequence[int]) -> float:
        pb = self._pb
        return float(sum(pb[a][b] for a, b in zip(perm, perm[1:])))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RhPanel):
            return NotImplemented
        return self.names == other.names and np.array_equal(self.cells, other.cells)


def rh_breaks(panel: RhPanel, perm: Sequence[int]) -> int:
    """Obligate breaks: hybrids retaining exactly one marker of an adjacent pair.

    Cells typed ``unknown`` never count.
    """
    check_permutation(perm, panel.markers)
    cells = panel.cells
    total = 0
    for a, b in zip(perm, perm[1:]):
        x, y = cells[a], cells[b]
        total += int(np.count_nonzero(((x == PRESENT) & (y == ABSENT)) | ((x == ABSENT) & (y == PRESENT))))
    return total


def rh_mass(panel: RhPanel, perm: Sequence[int]) -> float:
    check_permutation(perm, panel.markers)
    return panel.mass(perm)


Instance = TspInstance | AlspInstance | RhPanel
