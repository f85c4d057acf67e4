"""Artificial chemical reactor: one population of permutation "molecules"
optimising TSP tours, aircraft landing orders and RH marker orders together."""

from .problems import (
    Aircraft,
    AlspInstance,
    LandingSchedule,
    RhPanel,
    TspInstance,
    alsp_cost,
    alsp_decode,
    rh_breaks,
    rh_mass,
    tsp_cost,
)
from .reactor import (
    Molecule,
    ReactorConfig,
    RunReport,
    Universe,
    init_universe,
    run_epoch,
    run_until_done,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "Aircraft", "AlspInstance", "LandingSchedule", "RhPanel", "TspInstance",
    "alsp_cost", "alsp_decode", "rh_breaks", "rh_mass", "tsp_cost",
    "Molecule", "ReactorConfig", "RunReport", "Universe",
    "init_universe", "run_epoch", "run_until_done", "solve",
]
