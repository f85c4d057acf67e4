"""The reactor: molecules, the three reaction rules and the epoch loop.

A universe holds one group of molecules per problem instance. Each epoch
draws colliding pairs (lighter molecules collide more often), lets them react,
knocks some of the heaviest molecules against the walls, decays the heaviest
into fresh random ones and freezes groups whose population has collapsed onto
a narrow band around their best mass.
"""

from __future__ import annotations

import bisect
import json
import math
import random
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Iterable, Sequence

from .problems import ContractViolation, Instance, check_permutation

RULES = ("R1", "R2", "R3", "decay")


class ConfigError(ValueError):
    pass


class ReactorComplete(Exception):
    """Every group is frozen; there is nothing left to sample."""


@dataclass
class ReactorConfig:
    seed: int = 0
    # None means one collision per molecule in the universe
    reactions_per_epoch: int | None = None
    wall_probability: float = 0.1
    heavy_quantile: float = 0.25
    decay_fraction: float = 0.05
    saturation_share: float = 0.90
    saturation_tolerance: float = 0.01
    saturation_absolute: float = 1e-9
    max_epochs: int = 10000
    check_invariants: bool = False

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.reactions_per_epoch is not None and self.reactions_per_epoch < 0:
            raise ConfigError("reactions_per_epoch must be nonnegative")
        if not 0.0 <= self.wall_probability <= 1.0:
            raise ConfigError("wall_probability must lie in [0, 1]")
        if not 0.0 < self.heavy_quantile < 1.0:
            raise ConfigError("heavy_quantile must lie in (0, 1)")
        if not 0.0 <= self.decay_fraction <= 1.0:
            raise ConfigError("decay_fraction must lie in [0, 1]")
        if not 0.0 < self.saturation_share <= 1.0:
            raise ConfigError("saturation_share must lie in (0, 1]")
        if self.saturation_tolerance < 0 or self.saturation_absolute < 0:
            raise ConfigError("saturation tolerances must be nonnegative")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be nonnegative")


@dataclass(slots=True, eq=False)
class Molecule:
    group: ProblemGroup
    perm: tuple[int, ...]
    mass: float
    birth: int = -1

    @property
    def group_id(self) -> int:
        return self.group.group_id

    def __repr__(self) -> str:
        return f"Molecule(group={self.group_id}, mass={self.mass:g}, perm={self.perm})"


def make_molecule(group: ProblemGroup, perm: Sequence[int]) -> Molecule:
    perm = tuple(perm)
    return Molecule(group, perm, group.instance.mass(perm))


def _heaviness(m: Molecule) -> tuple[float, int]:
    # ascending = lightest first; among equal masses the oldest sorts last,
    # so trimming from the tail removes the older of tied molecules
    return (m.mass, -m.birth)


@dataclass(eq=False)
class ProblemGroup:
    group_id: int
    instance: Instance
    capacity: int
    frozen: bool = False
    saturation_epoch: int | None = None
    members: list[Molecule] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=lambda: dict.fromkeys(RULES, 0))
    _weights: list[float] | None = field(default=None, repr=False)

    @property
    def kind(self) -> str:
        return self.instance.kind

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def best(self) -> Molecule:
        return self.members[0]

    def add(self, m: Molecule) -> None:
        bisect.insort(self.members, m, key=_heaviness)
        self._weights = None

    def remove(self, m: Molecule) -> None:
        self.members.remove(m)
        self._weights = None

    def pop_heaviest(self) -> Molecule:
        self._weights = None
        return self.members.pop()

    def trim(self) -> list[Molecule]:
        out = []
        while len(self.members) > self.capacity:
            out.append(self.pop_heaviest())
        return out

    def rank_weights(self) -> list[float]:
        """Linear rank weights, k for the lightest down to 1 for the heaviest.

        Molecules of equal mass share the mean weight of their ranks.
        """
        if self._weights is None:
            ms = self.members
            k = len(ms)
            w = [0.0] * k
            i = 0
            while i < k:
                j = i
                while j + 1 < k and ms[j + 1].mass == ms[i].mass:
                    j += 1
                # ranks i+1..j+1 have weights k-i .. k-j
                avg = k - (i + j) / 2
                for r in range(i, j + 1):
                    w[r] = avg
                i = j + 1
            self._weights = w
        return self._weights


@dataclass
class EpochStats:
    epoch: int
    best_mass: dict[int, float]
    counts: dict[str, int]
    frozen: dict[int, bool]
    newly_frozen: list[int] = field(default_factory=list)
    terminal: bool = False


@dataclass
class GroupResult:
    group_id: int
    kind: str
    name: str
    n: int
    best_mass: float
    best_perm: tuple[int, ...]
    saturation_epoch: int | None
    counts: dict[str, int]


@dataclass
class RunReport:
    seed: int
    epochs: int
    groups: list[GroupResult]
    counts: dict[str, int]

    def group(self, group_id: int) -> GroupResult:
        return self.groups[group_id]


class Universe:
    def __init__(self, groups: list[ProblemGroup], config: ReactorConfig, rng: random.Random):
        self.groups = groups
        self.config = config
        self.rng = rng
        self.epoch = 0
        self.counts = dict.fromkeys(RULES, 0)
        self._births = 0

    @property
    def molecules(self) -> list[Molecule]:
        return [m for g in self.groups for m in g.members]

    @property
    def reactions_per_epoch(self) -> int:
        if self.config.reactions_per_epoch is not None:
            return self.config.reactions_per_epoch
        return sum(g.capacity for g in self.groups)

    def active_groups(self) -> list[ProblemGroup]:
        return [g for g in self.groups if not g.frozen]

    def stamp(self, m: Molecule) -> Molecule:
        m.birth = self._births
        self._births += 1
        return m

    def random_molecule(self, group: ProblemGroup) -> Molecule:
        perm = list(range(group.n))
        self.rng.shuffle(perm)
        return self.stamp(make_molecule(group, perm))

    def best_masses(self) -> dict[int, float]:
        return {g.group_id: g.best.mass for g in self.groups}

    def snapshot(self) -> str:
        """Deterministic JSON text of the full reactor state."""
        state = {
            "epoch": self.epoch,
            "births": self._births,
            "counts": self.counts,
            "rng": _rng_state_to_json(self.rng.getstate()),
            "groups": [
                {
                    "group_id": g.group_id,
                    "kind": g.kind,
                    "capacity": g.capacity,
                    "frozen": g.frozen,
                    "saturation_epoch": g.saturation_epoch,
                    "counts": g.counts,
                    "molecules": [
                        {"perm": list(m.perm), "mass": m.mass, "birth": m.birth} for m in g.members
                    ],
                }
                for g in self.groups
            ],
        }
        return json.dumps(state, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_snapshot(cls, text: str, instances: Sequence[Instance], config: ReactorConfig) -> Universe:
        state = json.loads(text)
        rng = random.Random()
        rng.setstate(_rng_state_from_json(state["rng"]))
        groups = []
        for gs, inst in zip(state["groups"], instances, strict=True):
            if gs["kind"] != inst.kind:
                raise ValueError(f"snapshot group {gs['group_id']} is {gs['kind']}, got {inst.kind}")
            g = ProblemGroup(gs["group_id"], inst, gs["capacity"], gs["frozen"], gs["saturation_epoch"])
            g.counts = dict(gs["counts"])
            for ms in gs["molecules"]:
                g.members.append(Molecule(g, tuple(ms["perm"]), ms["mass"], ms["birth"]))
            groups.append(g)
        u = cls(groups, config, rng)
        u.epoch = state["epoch"]
        u._births = state["births"]
        u.counts = dict(state["counts"])
        return u


def _rng_state_to_json(state):
    version, internal, gauss = state
    return [version, list(internal), gauss]


def _rng_state_from_json(state):
    version, internal, gauss = state
    return (version, tuple(internal), gauss)


# --------------------------------------------------------------------------
# Construction and selection
# --------------------------------------------------------------------------


def init_universe(groups: Iterable[tuple[Instance, int]], config: ReactorConfig | None = None) -> Universe:
    """Fill each group with ``capacity`` uniformly random permutations."""
    config = config or ReactorConfig()
    config.validate()
    specs = list(groups)
    if not specs:
        raise ConfigError("a universe needs at least one problem group")
    built = []
    for gid, (inst, capacity) in enumerate(specs):
        if capacity < 2:
            raise ConfigError(f"group {gid}: capacity must be at least 2, got {capacity}")
        built.append(ProblemGroup(gid, inst, int(capacity)))
    u = Universe(built, config, random.Random(config.seed))
    for g in built:
        for _ in range(g.capacity):
            g.add(u.random_molecule(g))
    return u


def select_pair(universe: Universe) -> tuple[Molecule, Molecule]:
    """Draw two distinct molecules, lighter ones more often.

    Weights are linear in mass rank within each group, so groups whose masses
    live on very different scales still compete evenly.
    """
    pool: list[Molecule] = []
    weights: list[float] = []
    for g in universe.groups:
        if g.frozen:
            continue
        pool.extend(g.members)
        weights.extend(g.rank_weights())
    if len(pool) < 2:
        raise ReactorComplete("fewer than two unfrozen molecules")
    cum = list(accumulate(weights))
    total = cum[-1]
    rng = universe.rng
    i = bisect.bisect_right(cum, rng.random() * total)
    while True:
        j = bisect.bisect_right(cum, rng.random() * total)
        if j != i:
            return pool[i], pool[j]


# --------------------------------------------------------------------------
# Reaction rules
# --------------------------------------------------------------------------


def cycle_crossover(p1: Sequence[int], p2: Sequence[int], start: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Swap the position cycle through ``start`` between two parents.

    The cycle follows p2's atom at the current position back to where p1 holds
    it, until it returns to ``start``. The first child keeps p1 on the cycle and
    p2 elsewhere; the second child is the mirror image.
    """
    where = {atom: pos for pos, atom in enumerate(p1)}
    c1 = list(p2)
    c2 = list(p1)
    pos = start
    while True:
        c1[pos] = p1[pos]
        c2[pos] = p2[pos]
        pos = where[p2[pos]]
        if pos == start:
            break
    return tuple(c1), tuple(c2)


def swap_positions(perm: Sequence[int], a: int, b: int) -> tuple[int, ...]:
    out = list(perm)
    out[a], out[b] = out[b], out[a]
    return tuple(out)


def _check_position(m: Molecule, l: int) -> None:
    if not 0 <= l < m.group.n:
        raise ContractViolation(f"collision point {l} outside [0, {m.group.n})")


def react_same(m1: Molecule, m2: Molecule, l: int) -> tuple[Molecule, Molecule]:
    """R1: two molecules of the same problem recombine by cycle crossover at ``l``."""
    if m1.group is not m2.group:
        raise ContractViolation("react_same needs two molecules of the same group")
    _check_position(m1, l)
    c1, c2 = cycle_crossover(m1.perm, m2.perm, l)
    return make_molecule(m1.group, c1), make_molecule(m1.group, c2)


def _swap_next(m: Molecule, l: int) -> Molecule:
    _check_position(m, l)
    n = m.group.n
    return make_molecule(m.group, swap_positions(m.perm, l, (l + 1) % n))


def react_cross(m5: Molecule, m6: Molecule, l5: int, l6: int) -> tuple[Molecule, Molecule]:
    """R2: molecules of different problems each swap the atom at their collision
    point with the following one (the last position wraps to the first)."""
    if m5.group is m6.group:
        raise ContractViolation("react_cross needs molecules of different groups; use react_same")
    return _swap_next(m5, l5), _swap_next(m6, l6)


def react_wall(m9: Molecule, l: int, heads: bool) -> Molecule:
    """R3: swap the atom at ``l`` with its right neighbour on heads, left on tails, cyclically."""
    _check_position(m9, l)
    n = m9.group.n
    other = (l + 1) % n if heads else (l - 1) % n
    return make_molecule(m9.group, swap_positions(m9.perm, l, other))


def wall_coin(rng: random.Random) -> bool:
    # k = +1 exactly when a uniform draw exceeds one half
    return rng.random() > 0.5


# --------------------------------------------------------------------------
# Population maintenance
# --------------------------------------------------------------------------


def insert_and_trim(universe: Universe, products: Iterable[Molecule]) -> None:
    """Add products, then cut each touched group back to capacity, heaviest first."""
    touched = []
    for m in products:
        g = m.group
        if g.frozen:
            raise ContractViolation(f"group {g.group_id} is frozen; no products accepted")
        if universe.groups[g.group_id] is not g:
            raise ContractViolation("product belongs to a foreign universe")
        g.add(universe.stamp(m))
        if g not in touched:
            touched.append(g)
    for g in touched:
        g.trim()


def _tail_count(fraction: float, capacity: int) -> int:
    # never reaches the lightest molecule
    return min(math.ceil(fraction * capacity - 1e-12), capacity - 1)


def decay(universe: Universe) -> int:
    """Replace the heaviest molecules of every unfrozen group with random ones.

    Returns the number of molecules replaced.
    """
    frac = universe.config.decay_fraction
    replaced = 0
    for g in universe.active_groups():
        k = _tail_count(frac, g.capacity)
        if k <= 0:
            continue
        for _ in range(k):
            g.pop_heaviest()
        for _ in range(k):
            g.add(universe.random_molecule(g))
        g.counts["decay"] += k
        replaced += k
    universe.counts["decay"] += replaced
    return replaced


def wall_collisions(universe: Universe) -> int:
    cfg = universe.config
    rng = universe.rng
    hits = 0
    for g in universe.active_groups():
        k = _tail_count(cfg.heavy_quantile, g.capacity)
        if k <= 0 or cfg.wall_probability <= 0:
            continue
        group_hits = 0
        light = band_limit(cfg, g.best.mass)
        for m in list(g.members[-k:]):
            if m.mass <= light:
                continue
            if rng.random() >= cfg.wall_probability:
                continue
            l = rng.randrange(g.n)
            product = react_wall(m, l, wall_coin(rng))
            if cfg.check_invariants:
                check_permutation(product.perm, g.n)
            g.remove(m)
            g.add(universe.stamp(product))
            group_hits += 1
        g.counts["R3"] += group_hits
        hits += group_hits
    universe.counts["R3"] += hits
    return hits


def band_limit(cfg: ReactorConfig, best: float) -> float:
    """Upper mass of the lightest excitation level, given the group's best mass."""
    return best * (1.0 + cfg.saturation_tolerance) if best > 0 else cfg.saturation_absolute


def is_saturated(universe: Universe, group_id: int) -> bool:
    g = universe.groups[group_id]
    limit = band_limit(universe.config, g.best.mass)
    inside = sum(1 for m in g.members if m.mass <= limit)
    return inside >= universe.config.saturation_share * len(g.members) - 1e-12


# --------------------------------------------------------------------------
# Epoch loop
# --------------------------------------------------------------------------


def _collide(universe: Universe) -> str:
    m1, m2 = select_pair(universe)
    rng = universe.rng
    if m1.group is m2.group:
        products = react_same(m1, m2, rng.randrange(m1.group.n))
        rule = "R1"
        m1.group.counts[rule] += 1
    else:
        products = react_cross(m1, m2, rng.randrange(m1.group.n), rng.randrange(m2.group.n))
        rule = "R2"
        m1.group.counts[rule] += 1
        m2.group.counts[rule] += 1
    if universe.config.check_invariants:
        for p in products:
            check_permutation(p.perm, p.group.n)
    if {p.perm for p in products} == {m1.perm, m2.perm}:
        # elastic collision: the products are the reactants, nothing changes
        products = ()
    insert_and_trim(universe, products)
    return rule


def run_epoch(universe: Universe) -> EpochStats:
    """One pass of collisions, wall hits, decay and the saturation check."""
    counts = dict.fromkeys(RULES, 0)
    if not universe.active_groups():
        return EpochStats(universe.epoch, universe.best_masses(), counts,
                          {g.group_id: g.frozen for g in universe.groups}, terminal=True)
    for _ in range(universe.reactions_per_epoch):
        rule = _collide(universe)
        counts[rule] += 1
        universe.counts[rule] += 1
    counts["R3"] = wall_collisions(universe)
    counts["decay"] = decay(universe)
    universe.epoch += 1
    newly = []
    for g in universe.active_groups():
        if is_saturated(universe, g.group_id):
            g.frozen = True
            g.saturation_epoch = universe.epoch
            newly.append(g.group_id)
    if universe.config.check_invariants:
        check_universe(universe)
    return EpochStats(universe.epoch, universe.best_masses(), counts,
                      {g.group_id: g.frozen for g in universe.groups}, newly)


def run_until_done(universe: Universe, callback=None) -> RunReport:
    """Run epochs until every group is frozen or the epoch budget is spent.

    ``callback`` (optional) receives each EpochStats as it is produced.
    """
    while universe.epoch < universe.config.max_epochs and universe.active_groups():
        stats = run_epoch(universe)
        if callback is not None:
            callback(stats)
    return report(universe)


def report(universe: Universe) -> RunReport:
    groups = [
        GroupResult(
            group_id=g.group_id,
            kind=g.kind,
            name=getattr(g.instance, "name", g.kind),
            n=g.n,
            best_mass=g.best.mass,
            best_perm=g.best.perm,
            saturation_epoch=g.saturation_epoch,
            counts=dict(g.counts),
        )
        for g in universe.groups
    ]
    return RunReport(universe.config.seed, universe.epoch, groups, dict(universe.counts))


def check_universe(universe: Universe) -> None:
    """Raise AssertionError if a capacity, ordering, permutation or mass invariant is broken."""
    for g in universe.groups:
        assert len(g.members) == g.capacity, f"group {g.group_id}: {len(g.members)} != {g.capacity}"
        keys = [_heaviness(m) for m in g.members]
        assert keys == sorted(keys), f"group {g.group_id} lost its mass ordering"
        for m in g.members:
            check_permutation(m.perm, g.n)
            assert m.mass == g.instance.mass(m.perm), f"stale mass on {m!r}"


def solve(groups: Iterable[tuple[Instance, int]], config: ReactorConfig | None = None) -> RunReport:
    return run_until_done(init_universe(groups, config))
