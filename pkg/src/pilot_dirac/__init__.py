"""Self-sourced pilot-wave model of a Dirac particle in 1+1 dimensions:
spectral field solver, guided and field-coupled particles, action field,
energy-momentum bookkeeping and Born-rule ensembles."""

__version__ = "0.1.0"

from .errors import ConfigError, ModelError, NodeError, PilotDiracError, SpacelikeCurrentError
from .lattice import Grid
from .solver import Mode, SolverConfig, evolve, init_scenario, run_coupled

__all__ = [
    "ConfigError", "ModelError", "NodeError", "PilotDiracError", "SpacelikeCurrentError",
    "Grid", "Mode", "SolverConfig", "evolve", "init_scenario", "run_coupled",
]
