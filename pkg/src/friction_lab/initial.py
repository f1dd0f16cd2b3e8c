"""Initial data presets and the well-prepared pairing of the two models."""

from __future__ import annotations

import numpy as np
from loguru import logger

from . import class1
from .config import ICConfig, RunConfig
from .diagnostics import lift
from .state import Grid1D, StateI, StateII


def _periodic_offset(x: np.ndarray, centre: float) -> np.ndarray:
    """Signed distance to ``centre`` on the unit torus, in ``[-0.5, 0.5)``."""
    return (x - centre + 0.5) % 1.0 - 0.5


def _shape(ic: ICConfig, x: np.ndarray) -> np.ndarray:
    """Dimensionless profile in ``[-1, 1]`` multiplying the relative amplitudes."""
    if ic.preset == "uniform":
        return np.zeros_like(x)
    if ic.preset == "sine_wave":
        return np.sin(2 * np.pi * ic.mode * x)
    offset = _periodic_offset(x, ic.centre)
    if ic.preset == "gaussian_bump":
        width = max(ic.width, 1e-12)
        return np.exp(-0.5 * (offset / width) ** 2)
    # two_state: plateau of half the domain around the centre
    if ic.width == 0:
        return (np.abs(offset) < 0.25).astype(float)
    return 0.5 * (np.tanh((offset + 0.25) / ic.width) - np.tanh((offset - 0.25) / ic.width))


def profiles(ic: ICConfig, grid: Grid1D) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Species densities, species velocities and temperature of a preset."""
    shape = _shape(ic, grid.x / grid.length)
    densities = np.asarray(ic.densities)[:, None]
    amplitudes = np.asarray(ic.amplitudes)[:, None]
    rho = densities * (1.0 + amplitudes * shape[None, :])
    v = np.broadcast_to(np.asarray(ic.velocities, dtype=float)[:, None], rho.shape).copy()
    theta = ic.temperature * (1.0 + ic.temperature_amplitude * shape)
    return rho, v, theta


def class2_initial(config: RunConfig) -> StateII:
    rho, v, theta = profiles(config.ic, config.grid)
    return StateII(rho=rho, v=v, theta=theta)


def class1_initial(config: RunConfig, epsilon: float | None = None) -> StateI:
    """Preset densities and temperature with the mass-weighted preset velocity."""
    rho, v, theta = profiles(config.ic, config.grid)
    barycentric = np.sum(rho * v, axis=0) / rho.sum(axis=0)
    return class1.make_state(
        rho,
        barycentric,
        theta,
        config.grid,
        config.thermo_model(),
        config.friction_matrix(epsilon),
        config.source_terms(),
    )


def paired_initial(config: RunConfig, epsilon: float | None = None) -> tuple[StateII, StateI]:
    """Class-I data and matching Class-II data.

    Well-prepared Class-II data is the lifted Class-I state. Otherwise the
    configured velocity mismatch, shifted to zero mass-weighted mean so the
    barycentric velocity is untouched, is added to the lifted velocities.
    """
    state1 = class1_initial(config, epsilon)
    lifted = lift(state1)
    if config.ic.well_prepared:
        return StateII(rho=lifted.rho.copy(), v=lifted.v.copy(), theta=lifted.theta.copy()), state1
    mismatch = np.broadcast_to(
        np.asarray(config.ic.velocity_mismatch, dtype=float)[:, None], state1.rho.shape
    )
    mean = np.sum(state1.rho * mismatch, axis=0) / state1.total_density
    logger.debug("ill-prepared data: species velocity mismatch applied")
    state2 = StateII(
        rho=lifted.rho.copy(), v=lifted.v + (mismatch - mean[None, :]), theta=lifted.theta.copy()
    )
    return state2, state1
