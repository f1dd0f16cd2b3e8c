"""Class-I solver: barycentric momentum with Maxwell-Stefan diffusion.

The diffusional velocities are algebraic in the state, so every state this
module hands out carries ``u`` solved from its own densities and temperature.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import fluxes
from . import maxwell_stefan as ms
from .errors import StepSizeError
from .maxwell_stefan import FrictionMatrix
from .sources import Sources
from .state import Grid1D, StateI, check_validity
from .thermo import ThermoModel, heat_capacity, internal_energy_density, pressure


def diffusion_velocities(
    rho: np.ndarray,
    theta: np.ndarray,
    grid: Grid1D,
    thermo: ThermoModel,
    friction: FrictionMatrix,
    sources: Sources,
    t: float = 0.0,
) -> np.ndarray:
    grad_p = fluxes.central_gradient(pressure(thermo, rho, theta), grid.dx)
    b = sources.body_forces(grid.x, t, thermo.n)
    forces = ms.assemble_forces(rho, thermo, b, grad_p)
    return ms.solve(rho, theta, friction, forces)


def make_state(
    rho: np.ndarray,
    v: np.ndarray,
    theta: np.ndarray,
    grid: Grid1D,
    thermo: ThermoModel,
    friction: FrictionMatrix,
    sources: Sources,
    t: float = 0.0,
) -> StateI:
    check_validity(rho, theta, thermo.validity, species_floor=thermo.validity.gamma)
    u = diffusion_velocities(rho, theta, grid, thermo, friction, sources, t)
    return StateI(rho=rho, v=v, theta=theta, u=u)


def cfl_dt(
    state: StateI,
    grid: Grid1D,
    thermo: ThermoModel,
    friction: FrictionMatrix,
    sources: Sources,
    cfl_number: float,
    dt_max: Optional[float] = None,
) -> float:
    """Advective limit, capped by the explicit conduction and diffusion limits."""
    speed = np.abs(state.species_velocities) + thermo.sound_speed(state.theta)
    dt = cfl_number * grid.dx / float(np.max(speed))
    kappa_max = sources.kappa.maximum(state.theta)
    if kappa_max > 0:
        cap = grid.dx**2 * float(np.min(heat_capacity(thermo, state.rho))) / (2 * kappa_max)
        dt = min(dt, cap)
    diffusivity = ms.diffusivity_bound(state.rho, thermo, friction)
    if diffusivity > 0:
        dt = min(dt, grid.dx**2 / (2 * diffusivity))
    if dt_max is not None:
        dt = min(dt, dt_max)
    return dt


def step(
    state: StateI,
    grid: Grid1D,
    thermo: ThermoModel,
    friction: FrictionMatrix,
    sources: Sources,
    dt: float,
    t: float = 0.0,
) -> StateI:
    admissible = cfl_dt(state, grid, thermo, friction, sources, cfl_number=1.0)
    if dt > admissible * (1 + 1e-12):
        raise StepSizeError(dt, admissible)
    dx = grid.dx
    cons = state.conserved(thermo)
    rho_total = state.total_density
    p_i = pressure(thermo, state.rho, state.theta)
    rho_e_i = internal_energy_density(thermo, state.rho, state.theta)
    p = p_i.sum(axis=0)
    rho_e = rho_e_i.sum(axis=0)
    velocities = state.species_velocities

    speed = np.max(np.abs(velocities) + thermo.sound_speed(state.theta), axis=0)
    s = fluxes.face_speed(speed)

    mass_flux = state.rho * velocities
    momentum_flux = cons.momentum * state.v + p
    energy_flux = (rho_e + p + 0.5 * rho_total * state.v**2) * state.v
    rho = cons.rho - dt * fluxes.divergence(fluxes.rusanov(mass_flux, cons.rho, s), dx)
    momentum = cons.momentum - dt * fluxes.divergence(
        fluxes.rusanov(momentum_flux, cons.momentum, s), dx
    )
    energy = cons.energy - dt * fluxes.divergence(
        fluxes.rusanov(energy_flux, cons.energy, s), dx
    )

    kappa = sources.kappa(state.theta)
    enthalpy_flux = np.sum((rho_e_i + p_i) * state.u, axis=0)
    diffusive = fluxes.conduction_flux(state.theta, kappa, dx) - fluxes.face_average(
        enthalpy_flux
    )
    energy = energy + dt * fluxes.divergence(diffusive, dx)

    if sources.forced:
        x = grid.x
        b = sources.body_forces(x, t, state.n)
        rho_b = np.sum(state.rho * b, axis=0)
        momentum = momentum + dt * rho_b
        energy = energy + dt * (
            sources.supply(x, t)
            + rho_b * state.v
            + np.sum(state.rho * b * state.u, axis=0)
        )

    total = rho.sum(axis=0)
    v = momentum / total
    theta = (energy - 0.5 * total * v**2) / heat_capacity(thermo, rho)
    check_validity(rho, theta, thermo.validity, species_floor=thermo.validity.gamma)
    u = diffusion_velocities(rho, theta, grid, thermo, friction, sources, t + dt)
    return StateI(rho=rho, v=v, theta=theta, u=u)


@dataclass(frozen=True)
class Residuals:
    R: np.ndarray
    Q: np.ndarray

    def norms(self, grid: Grid1D) -> tuple[float, float]:
        """L1 norms over the torus, summed over species for ``R``."""
        return (
            float(np.sum(np.abs(self.R)) * grid.dx),
            float(np.sum(np.abs(self.Q)) * grid.dx),
        )


def residuals(history: Sequence[StateI], grid: Grid1D, dt: float) -> Residuals:
    """Reformulation residuals at the middle of three equally spaced snapshots.

    ``R_i = -d_x(rho_i u_i) v + d_t(rho_i u_i) + 2 d_x(rho_i v u_i) + d_x(rho_i u_i^2)``
    and ``Q = d_t(sum rho u^2 / 2) + d_x(sum rho u^3 / 2) + d_x(3/2 sum rho u^2 v)``.
    """
    if len(history) != 3:
        raise ValueError(f"residuals need exactly three snapshots, got {len(history)}")
    prev, cur, nxt = history
    dx = grid.dx

    def grad(f):
        return fluxes.central_gradient(f, dx)

    flux = cur.rho * cur.u
    R = (
        -grad(flux) * cur.v
        + (nxt.rho * nxt.u - prev.rho * prev.u) / (2 * dt)
        + 2 * grad(flux * cur.v)
        + grad(flux * cur.u)
    )

    def kinetic(s: StateI) -> np.ndarray:
        return 0.5 * np.sum(s.rho * s.u**2, axis=0)

    Q = (
        (kinetic(nxt) - kinetic(prev)) / (2 * dt)
        + grad(0.5 * np.sum(cur.rho * cur.u**3, axis=0))
        + grad(1.5 * np.sum(cur.rho * cur.u**2, axis=0) * cur.v)
    )
    return Residuals(R=R, Q=Q)
