"""Unravelings of a time-local non-Markovian master equation.

Jump, diffusion and state-diffusion trajectory ensembles for a qubit coupled
to a bath with exponential memory, checked against the density-matrix
reference.
"""

from ._backend import BACKEND
from .bath import BathSpec, RateSchedule, alpha, solve_rate_function, uniform_grid
from .engine import METHODS, ObservableSeries, RunConfig, run_ensemble
from .errors import (ConfigurationError, NmunravelError, NumericalError, OutputError,
                     UnsupportedConfigurationError)
from .master import closed_form_undriven, integrate_master
from .scenario import load_scenario, parse_scenario
from .system import SystemSpec, two_level_atom

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BathSpec", "RateSchedule", "alpha", "solve_rate_function", "uniform_grid",
    "METHODS", "ObservableSeries", "RunConfig", "run_ensemble", "ConfigurationError",
    "NmunravelError", "NumericalError", "OutputError", "UnsupportedConfigurationError",
    "closed_form_undriven", "integrate_master", "load_scenario", "parse_scenario",
    "SystemSpec", "two_level_atom", "__version__",
]
