"""Class-II solver: one mass and momentum balance per species, one energy balance.

A step is Strang split: half a friction step, a forward-Euler Rusanov step of
the hyperbolic part with explicit conduction and sources, another half friction
step. Friction is cell-local and integrated with an implicit midpoint rule, so
it never restricts the time step.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from loguru import logger

from . import fluxes
from .errors import StepSizeError, StiffnessError
from .maxwell_stefan import FrictionMatrix, friction_operator, relaxation_rate
from .sources import Sources
from .state import ConservedII, Grid1D, StateII, check_validity
from .thermo import (
    ThermoModel,
    clamp_density,
    heat_capacity,
    internal_energy_density,
    pressure,
)

FRICTION_TOL = 1e-12
FRICTION_MAX_ITER = 50


def cfl_dt(
    state: StateII,
    grid: Grid1D,
    thermo: ThermoModel,
    friction: FrictionMatrix,
    sources: Sources,
    cfl_number: float,
    dt_max: Optional[float] = None,
    friction_cfl: Optional[float] = None,
) -> float:
    """Advective and conductive step limit. Friction never limits stability;
    ``friction_cfl`` optionally caps ``dt`` times the fastest relaxation rate
    so the quasi-steady velocity differences are resolved."""
    speed = np.abs(state.v) + thermo.sound_speed(state.theta)
    dt = cfl_number * grid.dx / float(np.max(speed))
    kappa_max = sources.kappa.maximum(state.theta)
    if kappa_max > 0:
        cap = grid.dx**2 * float(np.min(heat_capacity(thermo, state.rho))) / (2 * kappa_max)
        dt = min(dt, cap)
    if friction_cfl is not None and state.n > 1:
        rate = float(np.max(relaxation_rate(state.rho, state.theta, friction)))
        dt = min(dt, friction_cfl / rate)
    if dt_max is not None:
        dt = min(dt, dt_max)
    return dt


def friction_substep(
    state: StateII, thermo: ThermoModel, friction: FrictionMatrix, dt: float
) -> StateII:
    """Relax species velocities towards each other at constant total energy.

    Solves ``(D - a L) v1 = (D + a L) v0`` per cell with ``D = diag(rho)``,
    ``L`` the friction operator without temperature and ``a = dt theta* / (2 eps)``.
    ``theta*`` is the midpoint temperature, iterated until the kinetic energy
    lost equals the internal energy gained.
    """
    if state.n == 1 or dt == 0:
        return state
    rho, _ = clamp_density(thermo, state.rho)
    L = friction_operator(rho, 1.0, friction)
    D = np.einsum("ik,ij->kij", rho, np.eye(state.n))
    v0 = state.v.T[..., None]
    cv = heat_capacity(thermo, rho)
    kinetic0 = 0.5 * np.sum(rho * state.v**2, axis=0)
    theta_star = state.theta.copy()
    change = np.inf
    for iteration in range(FRICTION_MAX_ITER):
        a = (dt * theta_star / (2 * friction.epsilon))[:, None, None]
        v1 = np.linalg.solve(D - a * L, (D + a * L) @ v0)[..., 0].T
        kinetic1 = 0.5 * np.sum(rho * v1**2, axis=0)
        theta1 = state.theta + (kinetic0 - kinetic1) / cv
        midpoint = 0.5 * (state.theta + theta1)
        change = np.max(np.abs(midpoint - theta_star) / np.maximum(1.0, np.abs(theta_star)))
        theta_star = midpoint
        if change <= FRICTION_TOL:
            break
    else:
        raise StiffnessError(
            f"friction iteration did not converge in {FRICTION_MAX_ITER} iterations "
            f"(last change {change:.3e}); halve dt and retry"
        )
    logger.trace(f"friction substep converged after {iteration + 1} iterations")
    return StateII(rho=state.rho, v=v1, theta=theta1)


def hyperbolic_update(
    state: StateII,
    grid: Grid1D,
    thermo: ThermoModel,
    sources: Sources,
    dt: float,
    t: float = 0.0,
) -> StateII:
    """Rusanov step of the transport part plus explicit conduction and sources."""
    cons = state.conserved(thermo)
    p = pressure(thermo, state.rho, state.theta)
    rho_e = internal_energy_density(thermo, state.rho, state.theta)
    mass_flux = cons.momentum
    momentum_flux = cons.momentum * state.v + p
    energy_flux = np.sum((rho_e + p + 0.5 * state.rho * state.v**2) * state.v, axis=0)

    speed = np.max(np.abs(state.v) + thermo.sound_speed(state.theta), axis=0)
    s = fluxes.face_speed(speed)
    dx = grid.dx
    rho = cons.rho - dt * fluxes.divergence(fluxes.rusanov(mass_flux, cons.rho, s), dx)
    momentum = cons.momentum - dt * fluxes.divergence(
        fluxes.rusanov(momentum_flux, cons.momentum, s), dx
    )
    energy = cons.energy - dt * fluxes.divergence(
        fluxes.rusanov(energy_flux, cons.energy, s), dx
    )
    kappa = sources.kappa(state.theta)
    energy = energy + dt * fluxes.divergence(
        fluxes.conduction_flux(state.theta, kappa, dx), dx
    )

    if sources.forced:
        x = grid.x
        b = sources.body_forces(x, t, state.n)
        momentum = momentum + dt * state.rho * b
        energy = energy + dt * (
            np.sum(state.rho * b * state.v, axis=0) + sources.supply(x, t)
        )
    return StateII.from_conserved(ConservedII(rho, momentum, energy), thermo)


def step(
    state: StateII,
    grid: Grid1D,
    thermo: ThermoModel,
    friction: FrictionMatrix,
    sources: Sources,
    dt: float,
    t: float = 0.0,
) -> StateII:
    admissible = cfl_dt(state, grid, thermo, friction, sources, cfl_number=1.0)
    if dt > admissible * (1 + 1e-12):
        raise StepSizeError(dt, admissible)
    state = friction_substep(state, thermo, friction, 0.5 * dt)
    state = hyperbolic_update(state, grid, thermo, sources, dt, t)
    state = friction_substep(state, thermo, friction, 0.5 * dt)
    check_validity(state.rho, state.theta, thermo.validity)
    return state
