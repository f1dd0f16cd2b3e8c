"""Relative entropy between a Class-II state and a lifted Class-I state, and
the entropy budget of either model."""

from __future__ import annotations

import math
from typing import ClassVar, Mapping, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field

from . import fluxes
from .maxwell_stefan import FrictionMatrix
from .sources import Sources
from .state import Grid1D, StateI, StateII
from .thermo import (
    ThermoModel,
    entropy_density,
    relative_free_energy,
    sample_states,
)
from .thermo import relative_entropy_density as thermal_closed_form


class RelEntropyReport(BaseModel):
    t: float = 0.0
    H: float
    coercivity_margin: float
    friction_dissipation: float = Field(ge=0)
    conduction_dissipation: float = Field(ge=0)
    R_norm: float = math.nan
    Q_norm: float = math.nan
    clamped_cells: int = 0

    columns: ClassVar[tuple[str, ...]] = (
        "t",
        "H",
        "friction_dissipation",
        "conduction_dissipation",
        "coercivity_margin",
        "R_norm",
        "Q_norm",
    )

    def row(self) -> list[float]:
        return [getattr(self, c) for c in self.columns]


class EntropyProduction(BaseModel):
    conduction: float = Field(ge=0)
    friction: float = Field(ge=0)
    supply: float
    total_entropy: float

    @property
    def dissipation(self) -> float:
        return self.conduction + self.friction


def lift(state: StateI) -> StateII:
    return StateII(rho=state.rho, v=state.species_velocities, theta=state.theta)


def _check_same_grid(state: StateII, other: StateII):
    if state.rho.shape != other.rho.shape or state.theta.shape != other.theta.shape:
        raise ValueError(
            f"states live on different grids: {state.rho.shape} vs {other.rho.shape}"
        )


def thermal_relative_entropy(
    state: StateII, lifted: StateII, thermo: ThermoModel
) -> np.ndarray:
    """``sum_i (rho_i psi_i)(w|w_bar) + (rho_i eta_i - rho_bar_i eta_bar_i)(theta - theta_bar)``."""
    theta, theta_bar = state.theta, lifted.theta
    total = np.zeros_like(theta)
    for i in range(state.n):
        rho, rho_bar = state.rho[i], lifted.rho[i]
        total += relative_free_energy(thermo, i, (rho, theta), (rho_bar, theta_bar))
        gap = entropy_density(thermo, i, rho, theta) - entropy_density(
            thermo, i, rho_bar, theta_bar
        )
        total += gap * (theta - theta_bar)
    return total


def relative_entropy_density(
    state: StateII, lifted: StateII, thermo: ThermoModel
) -> np.ndarray:
    """Kinetic part plus the closed-form thermal part; zero where the states agree."""
    _check_same_grid(state, lifted)
    kinetic = 0.5 * np.sum(state.rho * (state.v - lifted.v) ** 2, axis=0)
    thermal = thermal_closed_form(
        thermo, (state.rho, state.theta), (lifted.rho, lifted.theta)
    )
    return kinetic + thermal


def relative_entropy_flux(
    state: StateII, lifted: StateII, thermo: ThermoModel
) -> np.ndarray:
    """Pointwise flux ``Q(w|w_bar)`` paired with the relative entropy density."""
    _check_same_grid(state, lifted)
    theta, theta_bar = state.theta, lifted.theta
    flux = np.zeros_like(theta)
    for i in range(state.n):
        rho, rho_bar = state.rho[i], lifted.rho[i]
        v, v_bar = state.v[i], lifted.v[i]
        dv = v - v_bar
        rel = relative_free_energy(thermo, i, (rho, theta), (rho_bar, theta_bar))
        gap = entropy_density(thermo, i, rho, theta) - entropy_density(
            thermo, i, rho_bar, theta_bar
        )
        dp = thermo.R[i] * (rho * theta - rho_bar * theta_bar)
        flux += 0.5 * rho * v * dv**2 + rel * v + gap * (theta - theta_bar) * v + dp * dv
    return flux


def friction_dissipation_density(
    state: StateII, lifted: StateII, friction: FrictionMatrix
) -> np.ndarray:
    b = friction.matrix
    dv = state.v - lifted.v
    total = np.zeros_like(state.theta)
    for i in range(state.n):
        for j in range(state.n):
            if i == j:
                continue
            total += b[i, j] * state.rho[i] * state.rho[j] * (dv[i] - dv[j]) ** 2
    return lifted.theta * total / (2 * friction.epsilon)


def conduction_dissipation_density(
    state: StateII, lifted: StateII, grid: Grid1D, sources: Sources
) -> np.ndarray:
    dlog = fluxes.central_gradient(np.log(state.theta), grid.dx) - fluxes.central_gradient(
        np.log(lifted.theta), grid.dx
    )
    return lifted.theta * sources.kappa(state.theta) * dlog**2


def relative_entropy(
    state: StateII,
    lifted: StateII,
    thermo: ThermoModel,
    grid: Grid1D,
    friction: FrictionMatrix,
    sources: Sources,
    coercivity_c: float = 0.0,
    residual_norms: tuple[float, float] = (math.nan, math.nan),
    t: float = 0.0,
) -> RelEntropyReport:
    if state.ncells != grid.ncells:
        raise ValueError(f"state has {state.ncells} cells, grid has {grid.ncells}")
    integrand = relative_entropy_density(state, lifted, thermo)
    distance = np.sum((state.rho - lifted.rho) ** 2, axis=0) + (state.theta - lifted.theta) ** 2
    return RelEntropyReport(
        t=t,
        H=float(grid.integrate(integrand)),
        coercivity_margin=float(np.min(integrand - coercivity_c * distance)),
        friction_dissipation=float(
            grid.integrate(friction_dissipation_density(state, lifted, friction))
        ),
        conduction_dissipation=float(
            grid.integrate(conduction_dissipation_density(state, lifted, grid, sources))
        ),
        R_norm=residual_norms[0],
        Q_norm=residual_norms[1],
        clamped_cells=int(np.count_nonzero(np.any(state.rho < thermo.rho_floor, axis=0))),
    )


def total_entropy(
    state: Union[StateII, StateI], thermo: ThermoModel, grid: Grid1D
) -> float:
    density = sum(
        entropy_density(thermo, i, state.rho[i], state.theta) for i in range(state.n)
    )
    return float(grid.integrate(density))


def entropy_production(
    state: Union[StateII, StateI],
    grid: Grid1D,
    thermo: ThermoModel,
    friction: FrictionMatrix,
    sources: Sources,
    t: float = 0.0,
) -> EntropyProduction:
    """Discrete entropy production of either model.

    Conduction is evaluated on faces the way the solvers difference it,
    ``kappa_f (theta_{k+1} - theta_k)^2 / (dx^2 theta_k theta_{k+1})``.
    Friction uses species velocities for Class-II and diffusional velocities
    for Class-I.
    """
    theta = state.theta
    kappa_face = fluxes.face_average(sources.kappa(theta))
    jump = fluxes.right(theta) - theta
    conduction = kappa_face * jump**2 / (grid.dx**2 * theta * fluxes.right(theta))

    velocities = state.u if isinstance(state, StateI) else state.v
    b = friction.matrix
    pairs = np.zeros_like(theta)
    for i in range(state.n):
        for j in range(state.n):
            if i != j:
                pairs += (
                    b[i, j] * state.rho[i] * state.rho[j] * (velocities[i] - velocities[j]) ** 2
                )
    supply = sources.supply(grid.x, t) / theta
    return EntropyProduction(
        conduction=float(grid.integrate(conduction)),
        friction=float(grid.integrate(pairs)) / (2 * friction.epsilon),
        supply=float(grid.integrate(supply)),
        total_entropy=total_entropy(state, thermo, grid),
    )


class CoercivityReport(BaseModel):
    samples: int
    seed: int
    infimum: float = Field(
        description="smallest ratio of the relative entropy integrand to the squared distance"
    )
    passed: bool


def sample_coercivity(
    thermo: ThermoModel, samples: int = 10_000, seed: int = 0
) -> CoercivityReport:
    """Empirical coercivity constant over random state pairs of the validity domain."""
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    rho, theta = sample_states(thermo, samples, rng)
    rho_bar, theta_bar = sample_states(thermo, samples, rng)
    zeros = np.zeros_like(rho)
    state = StateII(rho=rho, v=zeros, theta=theta)
    other = StateII(rho=rho_bar, v=zeros, theta=theta_bar)
    integrand = thermal_relative_entropy(state, other, thermo)
    distance = np.sum((rho - rho_bar) ** 2, axis=0) + (theta - theta_bar) ** 2
    keep = distance > 0
    infimum = float(np.min(integrand[keep] / distance[keep]))
    return CoercivityReport(samples=samples, seed=seed, infimum=infimum, passed=infimum > 0)


class GronwallFit(BaseModel):
    """Envelope ``H(t) <= (H(0) + K eps) exp(C t)`` fitted over a sweep."""

    C: float
    K: float

    def envelope(self, t: np.ndarray, epsilon: float, H0: float = 0.0) -> np.ndarray:
        return (H0 + self.K * epsilon) * np.exp(self.C * np.asarray(t))


def fit_gronwall(
    series: Mapping[float, tuple[Sequence[float], Sequence[float]]],
) -> GronwallFit:
    """Fit ``C`` from the growth of ``max_eps H/eps`` and take ``K`` as the
    smallest constant that makes the envelope hold at every sample."""
    scaled: dict[float, float] = {}
    for eps, (times, values) in series.items():
        for t, h in zip(times, values):
            if np.isfinite(h):
                scaled[float(t)] = max(scaled.get(float(t), 0.0), h / eps)
    times = np.array(sorted(t for t, y in scaled.items() if y > 0))
    C = 0.0
    if times.size >= 2 and np.ptp(times) > 0:
        logs = np.log([scaled[t] for t in times])
        C = max(0.0, float(np.polyfit(times, logs, 1)[0]))
    K = 0.0
    for eps, (times_eps, values) in series.items():
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            continue
        H0 = values[0]
        excess = (values * np.exp(-C * np.asarray(times_eps)) - H0) / eps
        K = max(K, float(np.nanmax(excess)))
    return GronwallFit(C=C, K=K)


def pointwise_distance(state: StateII, lifted: StateII) -> float:
    """Largest pointwise difference of the primitive fields."""
    diffs = [
        np.max(np.abs(state.rho - lifted.rho)),
        np.max(np.abs(state.v - lifted.v)),
        np.max(np.abs(state.theta - lifted.theta)),
    ]
    return float(max(diffs))
