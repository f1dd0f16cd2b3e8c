from __future__ import annotations

from dataclasses import dataclass
from typing import Annotated, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import DomainError
from .thermo import ThermoModel, ValidityDomain, heat_capacity


class Grid1D(BaseModel):
    """Uniform periodic grid of cell centres on ``[0, length)``."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    ncells: Annotated[int, Field(ge=4, description="number of cells")] = 128
    length: Annotated[float, Field(gt=0, description="domain length")] = 1.0

    @property
    def dx(self) -> float:
        return self.length / self.ncells

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.ncells) + 0.5) * self.dx

    def integrate(self, field: np.ndarray) -> np.ndarray:
        """Cell sum times ``dx`` along the last axis."""
        return np.sum(field, axis=-1) * self.dx

    def refine(self, factor: int = 2) -> Grid1D:
        return Grid1D(ncells=self.ncells * factor, length=self.length)


class ConservedII(NamedTuple):
    rho: np.ndarray
    momentum: np.ndarray
    energy: np.ndarray


class ConservedI(NamedTuple):
    rho: np.ndarray
    momentum: np.ndarray
    energy: np.ndarray


@dataclass(frozen=True)
class StateII:
    rho: np.ndarray
    v: np.ndarray
    theta: np.ndarray

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    @property
    def ncells(self) -> int:
        return self.rho.shape[1]

    @property
    def total_density(self) -> np.ndarray:
        return self.rho.sum(axis=0)

    @property
    def barycentric_velocity(self) -> np.ndarray:
        return np.sum(self.rho * self.v, axis=0) / self.total_density

    def kinetic_energy(self) -> np.ndarray:
        return 0.5 * np.sum(self.rho * self.v**2, axis=0)

    def conserved(self, thermo: ThermoModel) -> ConservedII:
        energy = heat_capacity(thermo, self.rho) * self.theta + self.kinetic_energy()
        return ConservedII(self.rho, self.rho * self.v, energy)

    @classmethod
    def from_conserved(cls, cons: ConservedII, thermo: ThermoModel) -> StateII:
        rho = cons.rho
        safe = np.maximum(rho, thermo.rho_floor)
        v = np.where(rho > 0, cons.momentum / safe, 0.0)
        kinetic = 0.5 * np.sum(rho * v**2, axis=0)
        theta = (cons.energy - kinetic) / heat_capacity(thermo, rho)
        return cls(rho=rho, v=v, theta=theta)


@dataclass(frozen=True)
class StateI:
    rho: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    u: np.ndarray

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    @property
    def ncells(self) -> int:
        return self.rho.shape[1]

    @property
    def total_density(self) -> np.ndarray:
        return self.rho.sum(axis=0)

    @property
    def species_velocities(self) -> np.ndarray:
        return self.v[None, :] + self.u

    def conserved(self, thermo: ThermoModel) -> ConservedI:
        rho = self.total_density
        energy = heat_capacity(thermo, self.rho) * self.theta + 0.5 * rho * self.v**2
        return ConservedI(self.rho, rho * self.v, energy)


def check_validity(
    rho: np.ndarray,
    theta: np.ndarray,
    domain: ValidityDomain,
    species_floor: float = 0.0,
):
    """Halt on the first cell outside the validity domain.

    Species densities must lie in ``[species_floor, M]``; total density and
    temperature in ``[gamma, M]``.
    """
    checks = [
        ("rho_i", np.any((rho < species_floor) | (rho > domain.M), axis=0)),
        ("rho", ~domain.contains(rho.sum(axis=0))),
        ("theta", ~domain.contains(theta)),
    ]
    for name, bad in checks:
        if np.any(bad):
            cell = int(np.flatnonzero(bad)[0])
            raise DomainError(
                f"state left the validity domain [{domain.gamma:g}, {domain.M:g}] in {name}",
                cell=cell,
                field=name,
            )
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(theta))):
        raise DomainError("non-finite state")
