from pathlib import Path

import numpy as np
import pytest

from acreactor.instance_io import parse_airland, parse_tsplib
from acreactor.problems import Aircraft, AlspInstance, TspInstance

DATA = Path(__file__).parent / "data"

# one line per acceptance criterion, printed in the terminal summary
CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)


def euclidean(points) -> TspInstance:
    p = np.asarray(points, dtype=float)
    d = np.sqrt(((p[:, None] - p[None]) ** 2).sum(-1))
    return TspInstance(d, symmetric=True)


def random_euclidean(n: int, seed: int) -> TspInstance:
    rng = np.random.default_rng(seed)
    return euclidean(rng.random((n, 2)))


def identical_aircraft(count: int, target: float, sep: float, runways: int = 1,
                       early: float = 1.0, late: float = 1.0) -> AlspInstance:
    a = Aircraft(earliest=0.0, target=target, latest=10 * target + 100, early_penalty=early, late_penalty=late)
    s = np.full((count, count), sep)
    np.fill_diagonal(s, 0.0)
    return AlspInstance([a] * count, s, runways=runways)


@pytest.fixture(scope="session")
def oliver30() -> TspInstance:
    return parse_tsplib((DATA / "oliver30.tsp").read_text(), source="oliver30.tsp")


@pytest.fixture(scope="session")
def oliver30_tour() -> tuple[int, ...]:
    lines = (DATA / "oliver30.opt.tour").read_text().split("TOUR_SECTION")[1].split()
    return tuple(int(x) - 1 for x in lines if x not in ("-1", "EOF"))


@pytest.fixture(scope="session")
def airland1_text() -> str:
    return (DATA / "airland1.txt").read_text()


@pytest.fixture(scope="session")
def airland1(airland1_text) -> AlspInstance:
    return parse_airland(airland1_text, runways=1, name="airland1")


@pytest.fixture(scope="session")
def airland1_2rw(airland1_text) -> AlspInstance:
    return parse_airland(airland1_text, runways=2, name="airland1")
