"""Manufactured Class-II fields and the pointwise relative entropy balance.

Each field is built so that its mass balances hold exactly: species ``i``
travels as a wave ``rho_i = r_i + a_i cos(k x - w_i t + phi_i)`` with momentum
``m_i + a_i w_i / k cos(...)``. The body force and heat supply that make it an
exact Class-II solution are derived symbolically, so two such fields form a
pair of exact solutions and the relative entropy balance between them must
close up to the finite differences used on the left-hand side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Annotated, Callable, Iterable, Optional

import numpy as np
import sympy
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import fluxes
from .diagnostics import relative_entropy_density, relative_entropy_flux
from .maxwell_stefan import FrictionMatrix
from .sources import KappaModel
from .state import Grid1D, StateII, check_validity
from .thermo import ThermoModel, eval_species, relative_quantity

TERM_NAMES = (
    "friction_dissipation",
    "conduction_dissipation",
    "relative_pressure",
    "velocity_gradient",
    "body_force",
    "relative_entropy_transport",
    "entropy_flux_mismatch",
    "heat_supply",
    "conductivity_mismatch",
    "conduction_flux",
    "friction_density_cross",
    "friction_temperature_cross",
    "friction_temperature_density",
)
TEMPERATURE_FRICTION_TERMS = (
    "friction_temperature_cross",
    "friction_temperature_density",
)
DIVERGENCE_TERMS = ("conduction_flux",)


class ManufacturedField(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    rho_mean: list[float]
    rho_amplitude: list[float]
    flux_mean: Annotated[list[float], Field(description="mean species momentum")]
    wave_speed: Annotated[list[float], Field(description="angular frequency of each density wave")]
    phase: list[float]
    theta_mean: float = 1.0
    theta_amplitude: float = 0.0
    theta_frequency: float = 0.0
    theta_phase: float = 0.0
    mode: Annotated[int, Field(ge=1)] = 1

    @model_validator(mode="after")
    def species_lists_agree(self):
        n = len(self.rho_mean)
        for name in ("rho_amplitude", "flux_mean", "wave_speed", "phase"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must have {n} entries")
        for r, a in zip(self.rho_mean, self.rho_amplitude):
            if r - abs(a) <= 0:
                raise ValueError("densities must stay positive")
        if self.theta_mean - abs(self.theta_amplitude) <= 0:
            raise ValueError("temperature must stay positive")
        return self

    @property
    def n(self) -> int:
        return len(self.rho_mean)


class ManufacturedPair(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    omega: ManufacturedField
    omega_bar: ManufacturedField


_BAR = ManufacturedField(
    rho_mean=[1.0, 0.8],
    rho_amplitude=[0.2, 0.15],
    flux_mean=[0.3, -0.2],
    wave_speed=[1.0, 0.5],
    phase=[0.0, 1.0],
    theta_mean=1.0,
    theta_amplitude=0.1,
    theta_frequency=0.7,
    theta_phase=0.3,
)

PAIRS: dict[str, ManufacturedPair] = {
    "identical": ManufacturedPair(name="identical", omega=_BAR, omega_bar=_BAR),
    "drift": ManufacturedPair(
        name="drift",
        omega=ManufacturedField(
            rho_mean=[1.1, 0.75],
            rho_amplitude=[0.25, 0.1],
            flux_mean=[0.1, 0.0],
            wave_speed=[0.8, 0.6],
            phase=[0.4, 0.2],
            theta_mean=1.2,
            theta_amplitude=0.15,
            theta_frequency=0.5,
            theta_phase=1.1,
        ),
        omega_bar=_BAR,
    ),
    "heated": ManufacturedPair(
        name="heated",
        omega=_BAR.model_copy(
            update=dict(theta_mean=1.5, theta_amplitude=0.3, theta_frequency=-1.2)
        ),
        omega_bar=_BAR,
    ),
    "counterflow": ManufacturedPair(
        name="counterflow",
        omega=ManufacturedField(
            rho_mean=[0.9, 1.2],
            rho_amplitude=[0.1, 0.3],
            flux_mean=[0.6, -0.7],
            wave_speed=[-0.5, 1.5],
            phase=[2.0, 0.0],
            theta_mean=0.9,
            theta_amplitude=0.05,
            theta_frequency=2.0,
            theta_phase=0.0,
            mode=2,
        ),
        omega_bar=ManufacturedField(
            rho_mean=[1.0, 1.0],
            rho_amplitude=[0.3, 0.2],
            flux_mean=[-0.4, 0.5],
            wave_speed=[1.5, -1.0],
            phase=[0.5, 2.5],
            theta_mean=1.1,
            theta_amplitude=0.2,
            theta_frequency=-0.4,
            theta_phase=0.8,
        ),
    ),
}


@dataclass(frozen=True)
class FieldValues:
    """A manufactured field and its forcing sampled at one time."""

    rho: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    v_x: np.ndarray
    theta_x: np.ndarray
    theta_t: np.ndarray
    body_force: np.ndarray
    heat_supply: np.ndarray

    def state(self) -> StateII:
        return StateII(rho=self.rho, v=self.v, theta=self.theta)


class CompiledField:
    """Numeric callables for one manufactured field with its exact forcing."""

    def __init__(
        self,
        field: ManufacturedField,
        thermo: ThermoModel,
        friction: FrictionMatrix,
        kappa: KappaModel,
        length: float,
    ):
        if field.n != thermo.n or field.n != friction.n:
            raise ValueError(
                f"manufactured field has {field.n} species, model has {thermo.n}"
            )
        x, t = sympy.symbols("x t", real=True)
        k = 2 * sympy.pi * field.mode / length
        n = field.n
        rho, mom = [], []
        for i in range(n):
            wave = sympy.cos(k * x - field.wave_speed[i] * t + field.phase[i])
            rho.append(field.rho_mean[i] + field.rho_amplitude[i] * wave)
            mom.append(
                field.flux_mean[i] + field.rho_amplitude[i] * field.wave_speed[i] / k * wave
            )
        v = [m / r for m, r in zip(mom, rho)]
        theta = field.theta_mean + field.theta_amplitude * sympy.cos(
            k * x - field.theta_frequency * t + field.theta_phase
        )
        b = friction.matrix
        body = []
        for i in range(n):
            drag = -theta / friction.epsilon * sum(
                float(b[i, j]) * rho[i] * rho[j] * (v[i] - v[j])
                for j in range(n)
                if j != i
            )
            p_i = thermo.R[i] * rho[i] * theta
            balance = sympy.diff(mom[i], t) + sympy.diff(mom[i] * v[i] + p_i, x) - drag
            body.append(balance / rho[i])
        energy = sum(
            thermo.c[i] * rho[i] * theta + sympy.Rational(1, 2) * mom[i] * v[i]
            for i in range(n)
        )
        energy_flux = sum(
            (
                (thermo.c[i] + thermo.R[i]) * rho[i] * theta
                + sympy.Rational(1, 2) * mom[i] * v[i]
            )
            * v[i]
            for i in range(n)
        )
        heat = (
            sympy.diff(energy, t)
            + sympy.diff(energy_flux, x)
            - sympy.diff(kappa(theta) * sympy.diff(theta, x), x)
            - sum(rho[i] * body[i] * v[i] for i in range(n))
        )

        def compile_(expr) -> Callable:
            return sympy.lambdify((x, t), expr, modules="numpy")

        self.n = n
        self._rho = [compile_(e) for e in rho]
        self._v = [compile_(e) for e in v]
        self._v_x = [compile_(sympy.diff(e, x)) for e in v]
        self._theta = compile_(theta)
        self._theta_x = compile_(sympy.diff(theta, x))
        self._theta_t = compile_(sympy.diff(theta, t))
        self._body = [compile_(e) for e in body]
        self._heat = compile_(heat)
        self._mass = [
            compile_(sympy.diff(rho[i], t) + sympy.diff(mom[i], x)) for i in range(n)
        ]

    @staticmethod
    def _eval(f: Callable, x: np.ndarray, t: float) -> np.ndarray:
        return np.broadcast_to(np.asarray(f(x, t), dtype=float), x.shape).copy()

    def _stack(self, fs: list[Callable], x: np.ndarray, t: float) -> np.ndarray:
        return np.stack([self._eval(f, x, t) for f in fs])

    def __call__(self, x: np.ndarray, t: float) -> FieldValues:
        return FieldValues(
            rho=self._stack(self._rho, x, t),
            v=self._stack(self._v, x, t),
            theta=self._eval(self._theta, x, t),
            v_x=self._stack(self._v_x, x, t),
            theta_x=self._eval(self._theta_x, x, t),
            theta_t=self._eval(self._theta_t, x, t),
            body_force=self._stack(self._body, x, t),
            heat_supply=self._eval(self._heat, x, t),
        )

    def mass_residual(self, x: np.ndarray, t: float) -> np.ndarray:
        return self._stack(self._mass, x, t)


@lru_cache(maxsize=32)
def _compile_cached(
    field_json: str, thermo_json: str, friction_json: str, kappa_json: str, length: float
) -> CompiledField:
    logger.debug("compiling manufactured field")
    return CompiledField(
        ManufacturedField.model_validate_json(field_json),
        ThermoModel.model_validate_json(thermo_json),
        FrictionMatrix.model_validate_json(friction_json),
        KappaModel.model_validate_json(kappa_json),
        length,
    )


def compile_field(
    field: ManufacturedField,
    thermo: ThermoModel,
    friction: FrictionMatrix,
    kappa: KappaModel,
    length: float,
) -> CompiledField:
    return _compile_cached(
        field.model_dump_json(),
        thermo.model_dump_json(),
        friction.model_dump_json(),
        kappa.model_dump_json(),
        float(length),
    )


def identity_terms(
    now: FieldValues,
    bar: FieldValues,
    thermo: ThermoModel,
    friction: FrictionMatrix,
    kappa: KappaModel,
    grid: Grid1D,
) -> dict[str, np.ndarray]:
    """Pointwise right-hand side of the relative entropy balance, term by term."""
    n = thermo.n
    eps = friction.epsilon
    B = friction.matrix
    rho, v, theta = now.rho, now.v, now.theta
    rho_b, v_b, theta_b = bar.rho, bar.v, bar.theta
    d_theta = theta - theta_b
    dv = v - v_b
    kap, kap_b = kappa(theta), kappa(theta_b)
    log_x, log_x_b = now.theta_x / theta, bar.theta_x / theta_b

    zeros = np.zeros_like(theta)
    friction_dissipation = zeros.copy()
    density_cross = zeros.copy()
    temperature_cross = zeros.copy()
    temperature_density = zeros.copy()
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dvb = v_b[i] - v_b[j]
            friction_dissipation += B[i, j] * rho[i] * rho[j] * ((v[i] - v[j]) - dvb) ** 2
            density_cross += B[i, j] * rho[i] * dv[i] * (rho[j] - rho_b[j]) * dvb
            temperature_cross += B[i, j] * rho[i] * rho[j] * dv[i] * dvb
            temperature_density += (
                B[i, j] * (rho[i] * rho[j] - rho_b[i] * rho_b[j]) * dvb * v_b[i]
            )

    relative_pressure = zeros.copy()
    entropy_transport = zeros.copy()
    flux_mismatch = zeros.copy()
    for i in range(n):
        omega, omega_b = (rho[i], theta), (rho_b[i], theta_b)
        relative_pressure -= relative_quantity("pressure", thermo, i, omega, omega_b) * bar.v_x[i]
        entropy_transport -= relative_quantity(
            "entropy_density", thermo, i, omega, omega_b
        ) * (bar.theta_t + v_b[i] * bar.theta_x)
        eta = eval_species(thermo, i, rho[i], theta).eta
        eta_b = eval_species(thermo, i, rho_b[i], theta_b).eta
        flux_mismatch -= rho[i] * dv[i] * bar.theta_x * (eta - eta_b)

    return {
        "friction_dissipation": -theta_b * friction_dissipation / (2 * eps),
        "conduction_dissipation": -theta_b * kap * (log_x - log_x_b) ** 2,
        "relative_pressure": relative_pressure,
        "velocity_gradient": -np.sum(rho * dv**2 * bar.v_x, axis=0),
        "body_force": np.sum(rho * (now.body_force - bar.body_force) * dv, axis=0),
        "relative_entropy_transport": entropy_transport,
        "entropy_flux_mismatch": flux_mismatch,
        "heat_supply": (now.heat_supply / theta - bar.heat_supply / theta_b) * d_theta,
        "conductivity_mismatch": (log_x - log_x_b) * log_x_b * (theta * kap_b - theta_b * kap),
        "conduction_flux": fluxes.central_gradient(
            d_theta * (kap * log_x - kap_b * log_x_b), grid.dx
        ),
        "friction_density_cross": -theta_b * density_cross / eps,
        "friction_temperature_cross": d_theta * temperature_cross / eps,
        "friction_temperature_density": d_theta * temperature_density / eps,
    }


class IdentityDefect(BaseModel):
    pair: str
    ncells: int
    dt: float
    pointwise: float = Field(description="L1 norm of LHS - RHS over the torus")
    integrated: float = Field(description="|integral of LHS - RHS| with divergences dropped")
    lhs_norm: float
    terms: dict[str, float] = Field(description="integral of every right-hand side term")


def check_identity(
    pair: ManufacturedPair,
    grid: Grid1D,
    dt: float,
    thermo: ThermoModel,
    friction: FrictionMatrix,
    kappa: KappaModel,
    t: float = 0.25,
    exclude: Iterable[str] = (),
) -> IdentityDefect:
    """Residual of ``d_t H + d_x Q = RHS`` for an exact pair of manufactured solutions.

    ``d_t H`` and ``d_x Q`` are central differences with steps ``dt`` and
    ``grid.dx``; the right-hand side uses exact derivatives except for the
    conduction flux divergence.
    """
    exclude = set(exclude)
    unknown = exclude - set(TERM_NAMES)
    if unknown:
        raise ValueError(f"unknown identity terms {sorted(unknown)}")
    omega = compile_field(pair.omega, thermo, friction, kappa, grid.length)
    omega_bar = compile_field(pair.omega_bar, thermo, friction, kappa, grid.length)
    x = grid.x

    def density(at: float) -> np.ndarray:
        return relative_entropy_density(omega(x, at).state(), omega_bar(x, at).state(), thermo)

    now, bar = omega(x, t), omega_bar(x, t)
    for values in (now, bar):
        check_validity(values.rho, values.theta, thermo.validity)
    dH_dt = (density(t + dt) - density(t - dt)) / (2 * dt)
    dQ_dx = fluxes.central_gradient(
        relative_entropy_flux(now.state(), bar.state(), thermo), grid.dx
    )
    terms = identity_terms(now, bar, thermo, friction, kappa, grid)
    rhs = sum(value for name, value in terms.items() if name not in exclude)
    local = sum(
        value
        for name, value in terms.items()
        if name not in exclude and name not in DIVERGENCE_TERMS
    )
    return IdentityDefect(
        pair=pair.name,
        ncells=grid.ncells,
        dt=dt,
        pointwise=float(grid.integrate(np.abs(dH_dt + dQ_dx - rhs))),
        integrated=float(abs(grid.integrate(dH_dt - local))),
        lhs_norm=float(grid.integrate(np.abs(dH_dt + dQ_dx))),
        terms={name: float(grid.integrate(value)) for name, value in terms.items()},
    )



class IdentityStudy(BaseModel):
    pair: str
    defects: list[IdentityDefect]
    orders: list[float]
    min_order: float
    zero_tolerance: float = 1e-12
    passed: bool


def identity_convergence(
    pair: ManufacturedPair,
    thermo: ThermoModel,
    friction: FrictionMatrix,
    kappa: KappaModel,
    ncells: int = 32,
    dt: float = 1e-2,
    levels: int = 3,
    length: float = 1.0,
    t: float = 0.25,
    exclude: Iterable[str] = (),
    min_order: float = 0.9,
    zero_tolerance: float = 1e-12,
) -> IdentityStudy:
    """Halve ``dx`` and ``dt`` together ``levels - 1`` times and report the observed orders."""
    if levels < 2:
        raise ValueError(f"a refinement study needs at least 2 levels, got {levels}")
    exclude = tuple(exclude)
    defects = []
    for level in range(levels):
        grid = Grid1D(ncells=ncells * 2**level, length=length)
        defect = check_identity(
            pair, grid, dt / 2**level, thermo, friction, kappa, t=t, exclude=exclude
        )
        logger.debug(
            f"{pair.name}: ncells={grid.ncells} dt={defect.dt:.3e} defect={defect.pointwise:.3e}"
        )
        defects.append(defect)
    values = [d.pointwise for d in defects]
    if max(values) <= zero_tolerance:
        return IdentityStudy(
            pair=pair.name,
            defects=defects,
            orders=[],
            min_order=min_order,
            zero_tolerance=zero_tolerance,
            passed=True,
        )
    orders = [
        math.log2(values[k] / values[k + 1]) if values[k + 1] > 0 else math.inf
        for k in range(levels - 1)
    ]
    return IdentityStudy(
        pair=pair.name,
        defects=defects,
        orders=orders,
        min_order=min_order,
        zero_tolerance=zero_tolerance,
        passed=min(orders) >= min_order,
    )


def resolve_pairs(names: Optional[Iterable[str]]) -> list[ManufacturedPair]:
    names = list(names) if names is not None else [n for n in PAIRS if n != "identical"]
    missing = [n for n in names if n not in PAIRS]
    if missing:
        raise ValueError(f"unknown manufactured pairs {missing}, choose from {list(PAIRS)}")
    return [PAIRS[n] for n in names]
