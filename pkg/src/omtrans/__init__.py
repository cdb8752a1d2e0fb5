"""Few-photon transport in a three-cavity optomechanical chain."""

from .errors import (ConfigError, ExceptionalPoint, FormulaDomainError, InvalidArgument,
                     NonUniqueSteadyState, OmtransError, PoleError, SolverFailure,
                     StepSizeError)
from .fock import FockSpace, Operator, make_space
from .model import DriveScenario, SystemParams, drive_scenario, thermal_occupancy

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ExceptionalPoint", "FormulaDomainError", "InvalidArgument",
    "NonUniqueSteadyState", "OmtransError", "PoleError", "SolverFailure", "StepSizeError",
    "FockSpace", "Operator", "make_space", "DriveScenario", "SystemParams",
    "drive_scenario", "thermal_occupancy",
]
