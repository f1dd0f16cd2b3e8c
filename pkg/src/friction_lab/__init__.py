from loguru import logger

logger.disable("friction_lab")
from .arg import ArgBase
from .config import LabConfig, RunConfig, labcfg
from .diagnostics import RelEntropyReport, lift, relative_entropy
from .errors import (
    AcceptanceError,
    ConfigError,
    ConsistencyError,
    DomainError,
    LabError,
    StepSizeError,
    StiffnessError,
)
from .harness import fit_rate, run_paired, run_single, run_sweep
from .maxwell_stefan import FrictionMatrix
from .state import Grid1D, StateI, StateII
from .thermo import ThermoModel, ValidityDomain

__all__ = [
    "ArgBase",
    "LabConfig",
    "RunConfig",
    "labcfg",
    "RelEntropyReport",
    "lift",
    "relative_entropy",
    "AcceptanceError",
    "ConfigError",
    "ConsistencyError",
    "DomainError",
    "LabError",
    "StepSizeError",
    "StiffnessError",
    "fit_rate",
    "run_paired",
    "run_single",
    "run_sweep",
    "FrictionMatrix",
    "Grid1D",
    "StateI",
    "StateII",
    "ThermoModel",
    "ValidityDomain",
]
