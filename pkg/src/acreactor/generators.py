"""Seeded synthetic instances: random Euclidean TSPs, planted RH panels, random landing problems."""

from __future__ import annotations

import numpy as np

from .instance_io import euc_2d, write_airland, write_rh_panel, write_tsplib
from .problems import ABSENT, PRESENT, Aircraft, AlspInstance, RhPanel, TspInstance

TSP_SCALE = 1000.0


def random_tsp(n: int, seed: int, scale: float = TSP_SCALE) -> TspInstance:
    """Uniform points in the unit square, stretched by ``scale`` before integer rounding."""
    if n < 2:
        raise ValueError(f"need at least 2 cities, got {n}")
    rng = np.random.default_rng(seed)
    coords = np.round(rng.random((n, 2)) * scale, 3)
    return TspInstance(euc_2d(coords), symmetric=True, name=f"random{n}-s{seed}",
                       coords=coords, scale=scale)


def planted_rh_panel(m: int, k: int, seed: int, noise: float = 0.0) -> RhPanel:
    """Panel whose marker order 0..m-1 changes exactly one hybrid per step.

    Each step flips a different hybrid, so with ``noise=0`` two markers
    ``i`` and ``j`` disagree on ``|i - j|`` hybrids and the planted order
    (or its reverse) is the unique minimum with ``m - 1`` breaks. ``noise``
    flips each cell independently afterwards.
    """
    if m < 2:
        raise ValueError(f"need at least 2 markers, got {m}")
    if k < m - 1:
        raise ValueError(f"need at least m - 1 = {m - 1} hybrids for distinct steps, got {k}")
    if not 0.0 <= noise <= 1.0:
        raise ValueError(f"noise rate must lie in [0, 1], got {noise}")
    rng = np.random.default_rng(seed)
    cells = np.empty((m, k), dtype=np.int8)
    cells[0] = rng.integers(0, 2, size=k)
    flips = rng.permutation(k)[: m - 1]
    for i in range(1, m):
        cells[i] = cells[i - 1]
        cells[i, flips[i - 1]] ^= 1
    if noise > 0:
        cells ^= (rng.random((m, k)) < noise).astype(np.int8)
    cells = np.where(cells == 1, PRESENT, ABSENT).astype(np.int8)
    return RhPanel(cells, names=[f"M{i}" for i in range(m)], name=f"planted{m}x{k}-s{seed}")


def random_alsp(p: int, seed: int, runways: int = 1) -> AlspInstance:
    """Random landing problem in the style of the OR-Library airland files.

    Aircraft belong to one of three classes that fix their penalties and the
    separation they need behind each other class.
    """
    if p < 1:
        raise ValueError(f"need at least one aircraft, got {p}")
    rng = np.random.default_rng(seed)
    classes = rng.integers(0, 3, size=p)
    class_sep = np.array([[3, 15, 15], [8, 8, 8], [8, 8, 8]], dtype=float)
    class_pen = np.array([[10.0, 10.0], [30.0, 30.0], [20.0, 40.0]])
    aircraft = []
    for i in range(p):
        appear = float(rng.integers(0, 20 * p))
        earliest = appear + float(rng.integers(50, 80))
        target = earliest + float(rng.integers(5, 30))
        latest = target + float(rng.integers(100, 400))
        g, h = class_pen[classes[i]]
        aircraft.append(Aircraft(earliest, target, latest, g, h, appear))
    sep = class_sep[classes][:, classes].copy()
    np.fill_diagonal(sep, 0.0)
    return AlspInstance(aircraft, sep, runways=runways, name=f"random{p}-s{seed}",
                        freeze_time=float(rng.integers(5, 15)))


def generate(kind: str, **params) -> str:
    if kind == "tsp-random":
        inst = random_tsp(params["n"], params["seed"], params.get("scale", TSP_SCALE))
        return write_tsplib(inst, comment=f"uniform unit-square points, seed={params['seed']}, "
                                          f"scale={inst.scale:g}")
    if kind == "rh-planted":
        panel = planted_rh_panel(params["m"], params["k"], params["seed"], params.get("noise", 0.0))
        return f"# planted order M0..M{panel.markers - 1}, seed={params['seed']}\n" + write_rh_panel(panel)
    if kind == "alsp-random":
        return write_airland(random_alsp(params["p"], params["seed"]))
    raise ValueError(f"unknown generator {kind!r}")
