"""Constrained Maxwell-Stefan system for the diffusional velocities.

For every cell the velocities ``u`` solve

    -sum_j b_ij theta rho_i rho_j (u_i - u_j) = eps d_i,    sum_i rho_i u_i = 0.

The friction operator is singular with null space ``span(1)``; the mass
constraint selects the unique solution. Fields are laid out species-first,
``(n, ncells)``.
"""

from __future__ import annotations

from typing import Annotated, NamedTuple, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, model_validator
from scipy.linalg import null_space

from .errors import ConsistencyError, DomainError
from .thermo import ThermoModel

TOL_CONSISTENCY = 1e-10
TOL_CONSTRAINT = 1e-12
TOL_SOLVE = 1e-11


class FrictionMatrix(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    b: Annotated[
        list[list[float]],
        Field(description="symmetric binary friction coefficients, diagonal ignored"),
    ]
    epsilon: Annotated[PositiveFloat, Field(description="friction time scale")]

    @model_validator(mode="after")
    def symmetric_positive(self):
        n = len(self.b)
        if any(len(row) != n for row in self.b):
            raise ValueError("friction matrix b must be square")
        for i in range(n):
            for j in range(i + 1, n):
                if self.b[i][j] != self.b[j][i]:
                    raise ValueError(f"b[{i}][{j}] != b[{j}][{i}]")
                if self.b[i][j] <= 0:
                    raise ValueError(f"b[{i}][{j}] must be positive")
        return self

    @classmethod
    def from_upper(cls, upper: Sequence[float], n: int, epsilon: float) -> FrictionMatrix:
        """Build from the row-major strictly upper triangle (length ``n(n-1)/2``)."""
        if len(upper) != n * (n - 1) // 2:
            raise ValueError(
                f"expected {n * (n - 1) // 2} upper-triangular entries for n={n}, got {len(upper)}"
            )
        b = [[0.0] * n for _ in range(n)]
        it = iter(upper)
        for i in range(n):
            for j in range(i + 1, n):
                b[i][j] = b[j][i] = float(next(it))
        return cls(b=b, epsilon=epsilon)

    @property
    def n(self) -> int:
        return len(self.b)

    @property
    def matrix(self) -> np.ndarray:
        b = np.array(self.b, dtype=float)
        np.fill_diagonal(b, 0.0)
        return b

    def with_epsilon(self, epsilon: float) -> FrictionMatrix:
        return FrictionMatrix(b=self.b, epsilon=epsilon)


class MSResidual(NamedTuple):
    force: np.ndarray
    constraint: float


def _as_cells(field: np.ndarray, n: int) -> tuple[np.ndarray, tuple[int, ...]]:
    field = np.asarray(field, dtype=float)
    if field.shape[0] != n:
        raise ValueError(f"expected {n} species along axis 0, got shape {field.shape}")
    return field.reshape(n, -1), field.shape[1:]


def friction_operator(
    rho: np.ndarray, theta: np.ndarray, friction: FrictionMatrix
) -> np.ndarray:
    """Per-cell friction operator ``A = K - diag(K 1)``, ``K_ij = b_ij theta rho_i rho_j``.

    Returns shape ``(ncells, n, n)``.
    """
    rho2, _ = _as_cells(rho, friction.n)
    theta = np.broadcast_to(np.asarray(theta, dtype=float).reshape(-1), rho2.shape[1:])
    K = friction.matrix[None] * (
        theta[:, None, None] * rho2.T[:, :, None] * rho2.T[:, None, :]
    )
    diag = np.arange(friction.n)
    K[:, diag, diag] -= K.sum(axis=2)
    return K


def friction_force(
    rho: np.ndarray, theta: np.ndarray, friction: FrictionMatrix, v: np.ndarray
) -> np.ndarray:
    """``-theta sum_j b_ij rho_i rho_j (v_i - v_j)`` without the ``1/eps`` factor."""
    rho2, shape = _as_cells(rho, friction.n)
    v2, _ = _as_cells(v, friction.n)
    A = friction_operator(rho2, theta, friction)
    return np.einsum("kij,jk->ik", A, v2).reshape((friction.n,) + shape)


def relaxation_rate(rho: np.ndarray, theta: np.ndarray, friction: FrictionMatrix) -> np.ndarray:
    """Per-cell bound ``theta max_i sum_j b_ij (rho_i + rho_j) / eps`` on the fastest
    friction relaxation rate of the species velocities; exact for two species."""
    rho2, shape = _as_cells(rho, friction.n)
    theta = np.broadcast_to(np.asarray(theta, dtype=float).reshape(-1), rho2.shape[1:])
    pair = friction.matrix[None] * (rho2.T[:, :, None] + rho2.T[:, None, :])
    return (theta * pair.sum(axis=2).max(axis=1) / friction.epsilon).reshape(shape)


def diffusivity_bound(rho: np.ndarray, thermo: ThermoModel, friction: FrictionMatrix) -> float:
    """Upper estimate ``eps max_i R_i (1 + R_i / c_i) / (b_min rho_min)`` of the
    diffusivity of species mass and enthalpy carried by the diffusional velocities."""
    if friction.n == 1:
        return 0.0
    b = friction.matrix[~np.eye(friction.n, dtype=bool)]
    R, c = np.asarray(thermo.R), np.asarray(thermo.c)
    rho_min = max(float(np.min(rho)), thermo.rho_floor)
    return friction.epsilon * float(np.max(R * (1 + R / c))) / (float(b.min()) * rho_min)


def assemble_forces(
    rho: np.ndarray,
    thermo: ThermoModel,
    body_forces: np.ndarray,
    grad_p: np.ndarray,
) -> np.ndarray:
    """``d_i = (rho_i / rho)(rho b - grad p) - rho_i b_i + grad p_i``.

    ``body_forces`` and ``grad_p`` are per species, shape ``(n, ...)``; the
    forces sum to zero over species by construction.
    """
    rho = np.asarray(rho, dtype=float)
    if rho.shape[0] != thermo.n:
        raise ValueError(f"expected {thermo.n} species, got shape {rho.shape}")
    if np.any(rho <= 0):
        cell = int(np.flatnonzero(np.any(rho <= 0, axis=0))[0]) if rho.ndim > 1 else None
        raise DomainError("Maxwell-Stefan forces need positive densities", cell=cell, field="rho")
    body_forces = np.broadcast_to(body_forces, rho.shape)
    grad_p = np.broadcast_to(grad_p, rho.shape)
    total = rho.sum(axis=0)
    rho_b = np.sum(rho * body_forces, axis=0)
    grad_total = grad_p.sum(axis=0)
    d = rho / total * (rho_b - grad_total) - rho * body_forces + grad_p
    # the last species closes the sum, so roundoff never shows up as an imbalance
    d[-1] = -d[:-1].sum(axis=0)
    return d


def _check_inputs(rho2: np.ndarray, theta: np.ndarray, d2: np.ndarray):
    bad = np.any(rho2 <= 0, axis=0)
    if np.any(bad):
        raise DomainError(
            "Maxwell-Stefan solve needs positive densities",
            cell=int(np.flatnonzero(bad)[0]),
            field="rho",
        )
    if np.any(theta <= 0):
        raise DomainError(
            "Maxwell-Stefan solve needs positive temperature",
            cell=int(np.flatnonzero(theta <= 0)[0]),
            field="theta",
        )
    scale = np.sum(np.abs(d2), axis=0) + np.finfo(float).tiny
    imbalance = np.abs(np.sum(d2, axis=0)) / scale
    if np.any(imbalance > TOL_CONSISTENCY):
        cell = int(np.argmax(imbalance))
        raise ConsistencyError(
            f"driving forces do not sum to zero (relative imbalance {imbalance[cell]:.3e})",
            cell=cell,
            field="d",
        )


def solve(
    rho: np.ndarray,
    theta_bar: np.ndarray,
    friction: FrictionMatrix,
    forces: np.ndarray,
) -> np.ndarray:
    """Diffusional velocities via the bordered system ``[A rho; rho^T 0][u; l] = [eps d; 0]``."""
    n = friction.n
    rho2, shape = _as_cells(rho, n)
    d2, _ = _as_cells(forces, n)
    theta = np.broadcast_to(np.asarray(theta_bar, dtype=float).reshape(-1), rho2.shape[1:])
    _check_inputs(rho2, theta, d2)
    A = friction_operator(rho2, theta, friction)
    if n > 1:
        coupling = -np.einsum("kii->ki", A)
        if np.any(coupling <= 0):
            cell = int(np.flatnonzero(np.any(coupling <= 0, axis=1))[0])
            raise DomainError("friction coefficients underflow", cell=cell, field="b")

    ncells = rho2.shape[1]
    bordered = np.zeros((ncells, n + 1, n + 1))
    bordered[:, :n, :n] = A
    bordered[:, :n, n] = rho2.T
    bordered[:, n, :n] = rho2.T
    rhs = np.zeros((ncells, n + 1))
    rhs[:, :n] = friction.epsilon * d2.T
    try:
        sol = np.linalg.solve(bordered, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as e:
        raise DomainError(f"singular Maxwell-Stefan system: {e}") from e
    return sol[:, :n].T.reshape((n,) + shape)


def solve_projected(
    rho: np.ndarray,
    theta_bar: np.ndarray,
    friction: FrictionMatrix,
    forces: np.ndarray,
) -> np.ndarray:
    """Same solution through the null space of the constraint: ``u = Z (Z^T A Z)^{-1} Z^T eps d``."""
    n = friction.n
    rho2, shape = _as_cells(rho, n)
    d2, _ = _as_cells(forces, n)
    theta = np.broadcast_to(np.asarray(theta_bar, dtype=float).reshape(-1), rho2.shape[1:])
    _check_inputs(rho2, theta, d2)
    A = friction_operator(rho2, theta, friction)
    u = np.zeros_like(rho2)
    for k in range(rho2.shape[1]):
        Z = null_space(rho2[:, k][None, :])
        if Z.shape[1] == 0:
            continue
        reduced = Z.T @ A[k] @ Z
        u[:, k] = Z @ np.linalg.solve(reduced, Z.T @ (friction.epsilon * d2[:, k]))
    return u.reshape((n,) + shape)


def residual(
    rho: np.ndarray,
    theta_bar: np.ndarray,
    friction: FrictionMatrix,
    forces: np.ndarray,
    u: np.ndarray,
) -> MSResidual:
    """Per-species max-norm of ``A u - eps d`` and the max of ``|sum_i rho_i u_i|``."""
    rho2, _ = _as_cells(rho, friction.n)
    d2, _ = _as_cells(forces, friction.n)
    u2, _ = _as_cells(u, friction.n)
    A = friction_operator(rho2, theta_bar, friction)
    force = np.einsum("kij,jk->ik", A, u2) - friction.epsilon * d2
    constraint = np.abs(np.sum(rho2 * u2, axis=0))
    return MSResidual(
        force=np.max(np.abs(force), axis=1), constraint=float(np.max(constraint))
    )
