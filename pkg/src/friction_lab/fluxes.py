"""Periodic finite-volume kernels.

Face ``k`` sits between cells ``k`` and ``k + 1`` (modulo ``ncells``).
All kernels act along the last axis.
"""

from __future__ import annotations

import numpy as np


def right(f: np.ndarray) -> np.ndarray:
    return np.roll(f, -1, axis=-1)


def left(f: np.ndarray) -> np.ndarray:
    return np.roll(f, 1, axis=-1)


def face_average(f: np.ndarray) -> np.ndarray:
    return 0.5 * (f + right(f))


def face_gradient(f: np.ndarray, dx: float) -> np.ndarray:
    return (right(f) - f) / dx


def central_gradient(f: np.ndarray, dx: float) -> np.ndarray:
    return (right(f) - left(f)) / (2 * dx)


def face_speed(speed: np.ndarray) -> np.ndarray:
    """Rusanov dissipation speed at faces from cell speeds of shape ``(ncells,)``."""
    return np.maximum(speed, right(speed))


def rusanov(flux: np.ndarray, cons: np.ndarray, speed: np.ndarray) -> np.ndarray:
    return 0.5 * (flux + right(flux)) - 0.5 * speed * (right(cons) - cons)


def divergence(face_flux: np.ndarray, dx: float) -> np.ndarray:
    """Telescoping difference of face fluxes; sums to zero over the torus."""
    return (face_flux - left(face_flux)) / dx


def conduction_flux(theta: np.ndarray, kappa: np.ndarray, dx: float) -> np.ndarray:
    """``kappa grad theta`` at faces with face-averaged conductivity."""
    return face_average(kappa) * face_gradient(theta, dx)
