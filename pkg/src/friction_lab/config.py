from __future__ import annotations

from pathlib import Path
from typing import Annotated, Literal, Optional

import numpy as np
from loguru import logger as logger
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    model_validator,
)

from ._utils import CONFIG_ENV, CONFIG_FILE, LogFile, dumps_toml, find_lab_settings
from .arg import ArgBase
from .errors import ConfigError
from .maxwell_stefan import FrictionMatrix
from .sources import KappaModel, SineForce, SineSupply, Sources
from .state import Grid1D
from .thermo import ThermoModel, ValidityDomain


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SpeciesConfig(_Block):
    n: Annotated[PositiveInt, Field(description="number of species")] = 2
    R: Annotated[list[PositiveFloat], Field(description="specific gas constant per species")] = [
        1.0,
        1.0,
    ]
    c: Annotated[list[PositiveFloat], Field(description="specific heat per species")] = [
        1.5,
        1.5,
    ]


class ThermoConfig(_Block):
    rho_floor: Annotated[
        PositiveFloat, Field(description="density floor used before taking logs")
    ] = 1e-12


class FrictionConfig(_Block):
    b: Annotated[
        list[PositiveFloat],
        Field(description="binary friction coefficients, strict upper triangle in row-major order"),
    ] = [1.0]
    epsilon: Annotated[PositiveFloat, Field(description="friction time scale")] = 1e-2
    epsilon_sweep: Annotated[
        list[PositiveFloat], Field(description="friction time scales of an epsilon sweep")
    ] = []


class ICConfig(_Block):
    preset: Annotated[
        Literal["uniform", "gaussian_bump", "two_state", "sine_wave"],
        Field(description="initial profile"),
    ] = "sine_wave"
    densities: Annotated[list[PositiveFloat], Field(description="base species densities")] = [
        1.0,
        1.0,
    ]
    velocities: Annotated[list[float], Field(description="base species velocities")] = [0.0, 0.0]
    temperature: Annotated[PositiveFloat, Field(description="base temperature")] = 1.0
    amplitudes: Annotated[
        list[float], Field(description="relative density perturbation per species")
    ] = [0.1, -0.1]
    temperature_amplitude: Annotated[
        float, Field(description="relative temperature perturbation")
    ] = 0.0
    centre: Annotated[
        float, Field(ge=0, le=1, description="bump or plateau centre, fraction of the length")
    ] = 0.5
    width: Annotated[
        NonNegativeFloat,
        Field(description="bump width or plateau edge width, fraction of the length; 0 is a sharp edge"),
    ] = 0.05
    mode: Annotated[PositiveInt, Field(description="wave number of sine_wave")] = 1
    velocity_mismatch: Annotated[
        list[float],
        Field(description="species velocity offsets applied to ill-prepared Class-II data"),
    ] = []
    well_prepared: Annotated[
        bool, Field(description="start Class-II from the lifted Class-I data")
    ] = True


class TimeConfig(_Block):
    t_end: Annotated[PositiveFloat, Field(description="final time")] = 0.1
    cfl_number: Annotated[float, Field(gt=0, le=1, description="CFL number")] = 0.5
    snapshot_interval: Annotated[
        PositiveFloat, Field(description="time between written snapshots")
    ] = 0.05
    dt_max: Annotated[Optional[PositiveFloat], Field(description="upper bound on the step")] = None
    friction_cfl: Annotated[
        Optional[PositiveFloat],
        Field(description="bound on dt times the fastest Class-II friction relaxation rate"),
    ] = None


class SourcesConfig(KappaModel):
    body_force_amplitude: Annotated[
        list[float],
        Field(description="per-species amplitude of a sine body force, empty for none"),
    ] = []
    body_force_mode: Annotated[PositiveInt, Field(description="wave number of the body force")] = 1
    heat_supply_amplitude: Annotated[
        float, Field(description="amplitude of a sine heat supply rho r")
    ] = 0.0
    heat_supply_mode: Annotated[PositiveInt, Field(description="wave number of the heat supply")] = 1


class DiagnosticsConfig(_Block):
    coercivity_c: Annotated[
        NonNegativeFloat, Field(description="constant C of the reported coercivity margin")
    ] = 0.0
    entropy_slack: Annotated[
        NonNegativeFloat,
        Field(description="multiplier of the dx dt production allowance for entropy decrease"),
    ] = 1.0


class SweepConfig(_Block):
    slope_threshold: Annotated[
        float, Field(description="minimum log-log slope of H(t_end) against epsilon")
    ] = 0.8
    monotone_slack: Annotated[
        NonNegativeFloat, Field(description="relative slack of the monotonicity check")
    ] = 0.05
    prepared_tolerance: Annotated[
        NonNegativeFloat, Field(description="H(0) above this marks the sweep ill-prepared")
    ] = 1e-12
    executor: Annotated[
        Optional[str],
        Field(description="serial, process or an import path; defaults to the lab config"),
    ] = None
    workers: Annotated[Optional[PositiveInt], Field(description="worker processes")] = None


class IdentityConfig(_Block):
    pairs: Annotated[list[str], Field(description="manufactured pairs to audit")] = [
        "drift",
        "heated",
        "counterflow",
    ]
    ncells: Annotated[int, Field(ge=4, description="coarsest grid")] = 32
    dt: Annotated[PositiveFloat, Field(description="coarsest time difference step")] = 1e-2
    levels: Annotated[int, Field(ge=2, description="number of refinement levels")] = 3
    t: Annotated[float, Field(description="time at which the balance is audited")] = 0.25
    epsilon: Annotated[
        Optional[PositiveFloat], Field(description="friction time scale, defaults to friction.epsilon")
    ] = None
    min_order: Annotated[float, Field(description="minimum observed order")] = 0.9


class OutputsConfig(_Block):
    directory: Annotated[Path, Field(description="output directory")] = Path("flab_out")
    formats: Annotated[
        list[Literal["csv", "dat"]], Field(description="written formats")
    ] = ["csv"]


class RunConfig(ArgBase):
    """Everything one `flab` experiment needs."""

    species: SpeciesConfig = Field(default_factory=SpeciesConfig)
    validity: ValidityDomain = Field(default_factory=ValidityDomain)
    thermo: ThermoConfig = Field(default_factory=ThermoConfig)
    friction: FrictionConfig = Field(default_factory=FrictionConfig)
    grid: Grid1D = Field(default_factory=Grid1D)
    ic: ICConfig = Field(default_factory=ICConfig)
    time: TimeConfig = Field(default_factory=TimeConfig)
    sources: SourcesConfig = Field(default_factory=SourcesConfig)
    diagnostics: DiagnosticsConfig = Field(default_factory=DiagnosticsConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    identity: IdentityConfig = Field(default_factory=IdentityConfig)
    outputs: OutputsConfig = Field(default_factory=OutputsConfig)

    @model_validator(mode="after")
    def consistent(self):
        n = self.species.n
        problems = []

        def per_species(name: str, values: list, allow_empty: bool = False):
            if allow_empty and len(values) == 0:
                return
            if len(values) != n:
                problems.append(f"{name} has {len(values)} entries, species.n is {n}")

        per_species("species.R", self.species.R)
        per_species("species.c", self.species.c)
        per_species("ic.densities", self.ic.densities)
        per_species("ic.velocities", self.ic.velocities)
        per_species("ic.amplitudes", self.ic.amplitudes)
        per_species("ic.velocity_mismatch", self.ic.velocity_mismatch, allow_empty=True)
        per_species(
            "sources.body_force_amplitude", self.sources.body_force_amplitude, allow_empty=True
        )
        if len(self.friction.b) != n * (n - 1) // 2:
            problems.append(
                f"friction.b has {len(self.friction.b)} entries, "
                f"n={n} species need {n * (n - 1) // 2}"
            )
        if self.time.snapshot_interval > self.time.t_end:
            problems.append("time.snapshot_interval exceeds time.t_end")
        if self.sources.check_domain(self.validity) < self.sources.kappa_min:
            problems.append("conductivity drops below sources.kappa_min in the validity domain")
        sweep = self.friction.epsilon_sweep
        if sweep:
            if len(sweep) < 3:
                problems.append(f"friction.epsilon_sweep needs at least 3 values, got {len(sweep)}")
            elif np.log10(max(sweep) / min(sweep)) < 2 - 1e-9:
                problems.append("friction.epsilon_sweep must span at least two decades")
        if not self.ic.well_prepared and not self.ic.velocity_mismatch:
            problems.append("ic.well_prepared = false needs ic.velocity_mismatch")
        if problems:
            raise ConfigError(problems)
        return self

    def thermo_model(self) -> ThermoModel:
        return ThermoModel(
            R=self.species.R,
            c=self.species.c,
            validity=self.validity,
            rho_floor=self.thermo.rho_floor,
        )

    def friction_matrix(self, epsilon: Optional[float] = None) -> FrictionMatrix:
        return FrictionMatrix.from_upper(
            self.friction.b, self.species.n, epsilon or self.friction.epsilon
        )

    def kappa_model(self) -> KappaModel:
        return KappaModel(
            kappa=self.sources.kappa,
            kappa_theta=self.sources.kappa_theta,
            kappa_min=self.sources.kappa_min,
        )

    def source_terms(self) -> Sources:
        src = self.sources
        body = None
        if src.body_force_amplitude and np.any(src.body_force_amplitude):
            body = SineForce(
                amplitude=tuple(src.body_force_amplitude),
                mode=src.body_force_mode,
                length=self.grid.length,
            )
        heat = None
        if src.heat_supply_amplitude != 0:
            heat = SineSupply(
                amplitude=src.heat_supply_amplitude,
                mode=src.heat_supply_mode,
                length=self.grid.length,
            )
        return Sources(kappa=self.kappa_model(), body_force=body, heat_supply=heat)

    def with_epsilon(self, epsilon: float) -> RunConfig:
        return self.model_copy(
            update={"friction": self.friction.model_copy(update={"epsilon": epsilon})}
        )

    def to_toml(self, *leading_sections: str) -> str:
        """Effective configuration as TOML, field descriptions as comments.

        `flab config` prints the lab settings; a run configuration is written
        next to every output so the run can be repeated.
        """
        return dumps_toml(self, list(leading_sections), header="flab run configuration")


class CLIConfig(BaseModel):
    model_config = ConfigDict(validate_assignment=True)
    logging_cmd: Annotated[bool, Field(description="log the running command")] = True
    log_file: Annotated[
        LogFile, Field(description="log file", validate_default=True)
    ] = LogFile(path=Path("flab.log"))
    log_rotation: Annotated[Optional[str], Field(description="log rotation")] = None
    log_compression: Annotated[
        Optional[str], Field(description="compression method")
    ] = None
    serialize_log: Annotated[
        bool,
        Field(description="serialize log, set to false to get a human-readable log"),
    ] = True


class ExecutorConfig(BaseModel):
    name: Annotated[
        str,
        Field(description="serial, process, or the import path of a custom executor class"),
    ] = "serial"
    workers: Annotated[PositiveInt, Field(description="worker processes")] = 1


class LabConfig(BaseModel):
    model_config = ConfigDict(validate_assignment=True)
    cli: CLIConfig = Field(
        default_factory=CLIConfig,
        description="cli config,  Check https://loguru.readthedocs.io/en/stable/api/logger.html for details about log_rotation, log_compression, serialize_log",
    )
    executor: ExecutorConfig = Field(
        default_factory=ExecutorConfig, description="default executor of sweeps"
    )
    source_file: Annotated[
        Optional[Path], Field(description="Path of the config file", exclude=True)
    ] = None

    def to_toml(self, *leading_sections: str) -> str:
        """Convert the configuration to TOML format string.

        A common usage is `flab config - to-toml > flab_config.toml`.
        """
        return dumps_toml(self, list(leading_sections))


def init_labcfg() -> LabConfig:
    if (context := find_lab_settings()) is not None:
        p, cfg = context
        logger.info(f"Load friction_lab config from {p}")
        cfg["source_file"] = p
        return LabConfig.model_validate(cfg)
    logger.warning(
        f"{CONFIG_FILE} or {CONFIG_ENV} environment variable or [tool.friction_lab] in a pyproject.toml is not found. Use default settings."
    )
    return LabConfig()


labcfg = init_labcfg()
