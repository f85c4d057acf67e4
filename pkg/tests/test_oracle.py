import itertools
import math

import numpy as np
import pytest

from acreactor.generators import planted_rh_panel, random_alsp
from acreactor.oracle import (
    OracleRefused,
    alsp_exact_small,
    brute_force_min,
    held_karp,
    nn_tour,
)
from acreactor.problems import Aircraft, AlspInstance, RhPanel, TspInstance, alsp_cost, alsp_decode
from acreactor.reactor import ReactorConfig, init_universe, run_until_done

from conftest import euclidean, random_euclidean


def test_brute_force_unit_triangle():
    inst = TspInstance(np.ones((3, 3)) - np.eye(3))
    res = brute_force_min(inst.mass, 3)
    assert res.best_mass == 3 and res.best_perm == (0, 1, 2) and res.enumerated == 6


def test_brute_force_two_markers():
    panel = RhPanel(np.array([[1, 0, 1], [0, 0, 1]], dtype=np.int8))
    res = brute_force_min(panel.mass, 2)
    assert res.enumerated == 2
    assert panel.mass((0, 1)) == panel.mass((1, 0)) == res.best_mass == 1
    assert res.best_perm == (0, 1)


def test_brute_force_refuses_large():
    with pytest.raises(OracleRefused):
        brute_force_min(lambda p: 0.0, 11)


def test_brute_force_lexicographic_ties():
    res = brute_force_min(lambda p: float(p[-1] != 3), 4)
    assert res.best_perm == (0, 1, 2, 3)


@pytest.mark.parametrize("seed", range(5))
def test_brute_force_matches_held_karp(seed):
    inst = random_euclidean(8, seed)
    bf = brute_force_min(inst.mass, 8, rotation_invariant=True)
    hk_cost, hk_tour = held_karp(inst.costs)
    assert bf.enumerated == math.factorial(7)
    assert bf.best_mass == pytest.approx(hk_cost, rel=1e-12)
    assert inst.mass(hk_tour) == pytest.approx(hk_cost, rel=1e-12)
    assert inst.mass(bf.best_perm) == bf.best_mass


def test_held_karp_asymmetric_matches_full_enumeration():
    rng = np.random.default_rng(3)
    c = rng.integers(1, 50, size=(6, 6)).astype(float)
    np.fill_diagonal(c, 0)
    inst = TspInstance(c)
    full = min(inst.mass(p) for p in itertools.permutations(range(6)))
    assert held_karp(c)[0] == full


def test_nn_all_equal_costs():
    inst = TspInstance(np.ones((5, 5)) - np.eye(5))
    assert nn_tour(inst, 2) == (2, 0, 1, 3, 4)


def test_nn_collinear():
    assert nn_tour(euclidean([(0, 0), (1, 0), (2, 0)]), 0) == (0, 1, 2)


@pytest.mark.parametrize("n", range(3, 10))
def test_nn_never_beats_optimum(n):
    for seed in range(3):
        inst = random_euclidean(n, 100 * n + seed)
        opt = held_karp(inst.costs)[0]
        for start in range(n):
            assert inst.mass(nn_tour(inst, start)) >= opt - 1e-9


def test_alsp_single_aircraft():
    inst = AlspInstance([Aircraft(0, 5, 10, 1, 1)], np.zeros((1, 1)))
    res = alsp_exact_small(inst)
    assert res.best_mass == 0 and res.schedule.times == [5]


def test_alsp_two_aircraft_by_hand():
    # order (0, 1): aircraft 0 lands 5 early at cost 1 each -> 5
    # order (1, 0): aircraft 0 lands 5 late at cost 2 each -> 10
    a0 = Aircraft(0, 10, 100, 1, 2)
    a1 = Aircraft(0, 10, 100, 3, 3)
    inst = AlspInstance([a0, a1], np.array([[0, 5], [5, 0]], dtype=float))
    assert alsp_cost(inst, alsp_decode(inst, (0, 1))) == 5
    assert alsp_cost(inst, alsp_decode(inst, (1, 0))) == 10
    res = alsp_exact_small(inst)
    assert res.best_mass == 5 and res.best_perm == (0, 1)


def test_alsp_refuses_large():
    with pytest.raises(OracleRefused):
        alsp_exact_small(random_alsp(9, 0))
    with pytest.raises(OracleRefused):
        alsp_exact_small(random_alsp(4, 0, runways=3))


@pytest.mark.parametrize("runways", [1, 2])
def test_alsp_oracle_schedule_is_reproducible(runways):
    inst = random_alsp(5, 7, runways=runways)
    res = alsp_exact_small(inst)
    again = alsp_decode(inst, res.best_perm, runway_of=res.schedule.runway_of)
    assert alsp_cost(inst, again) == res.best_mass
    assert alsp_exact_small(inst).best_mass == res.best_mass


def test_alsp_single_runway_oracle_matches_decoder_enumeration():
    inst = random_alsp(5, 3)
    direct = min(alsp_cost(inst, alsp_decode(inst, p)) for p in itertools.permutations(range(5)))
    assert alsp_exact_small(inst).best_mass == direct


@pytest.mark.parametrize("seed", range(50))
def test_acr_never_below_oracle(seed):
    runways = 1 + seed % 2
    if seed % 3 == 0:
        inst = random_alsp(4 + seed % 2, seed, runways=runways)
        oracle = alsp_exact_small(inst).best_mass
    elif seed % 3 == 1:
        inst = random_euclidean(6, seed)
        oracle = brute_force_min(inst.mass, 6, rotation_invariant=True).best_mass
    else:
        inst = planted_rh_panel(6, 8, seed, noise=0.1)
        oracle = brute_force_min(inst.mass, 6).best_mass
    rep = run_until_done(init_universe([(inst, 12)], ReactorConfig(seed=seed, max_epochs=60)))
    assert rep.groups[0].best_mass >= oracle - 1e-9 * max(1.0, oracle)
