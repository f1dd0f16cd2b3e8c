"""Body forces, heat supply and thermal conductivity."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Annotated, Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .thermo import ValidityDomain

BodyForce = Callable[[np.ndarray, float], np.ndarray]
HeatSupply = Callable[[np.ndarray, float], np.ndarray]


class KappaModel(BaseModel):
    """Thermal conductivity ``kappa + kappa_theta * theta``.

    Works on floats, arrays and sympy expressions alike.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kappa: Annotated[float, Field(ge=0, description="constant part of the conductivity")] = 1e-3
    kappa_theta: Annotated[
        float,
        Field(ge=0, description="temperature slope of the conductivity (its Lipschitz bound)"),
    ] = 0.0
    kappa_min: Annotated[
        float, Field(gt=0, description="declared lower bound of the conductivity")
    ] = 1e-6

    @model_validator(mode="after")
    def bounded_away_from_zero(self):
        if self.kappa < self.kappa_min:
            raise ValueError(
                f"kappa={self.kappa} must be >= kappa_min={self.kappa_min}"
            )
        return self

    def __call__(self, theta):
        return self.kappa + self.kappa_theta * theta

    def maximum(self, theta: np.ndarray) -> float:
        return float(np.max(self(np.asarray(theta))))

    def check_domain(self, domain: ValidityDomain) -> float:
        """Smallest conductivity over the validity domain."""
        return self.kappa + self.kappa_theta * domain.gamma



@dataclass(frozen=True)
class Sources:
    """Runtime source terms.

    ``body_force(x, t)`` returns the per-species force per mass, shape
    ``(n, ncells)``; ``heat_supply(x, t)`` returns ``rho r``, shape
    ``(ncells,)``. ``None`` means zero.
    """

    kappa: KappaModel = field(default_factory=KappaModel)
    body_force: Optional[BodyForce] = None
    heat_supply: Optional[HeatSupply] = None

    @property
    def forced(self) -> bool:
        return self.body_force is not None or self.heat_supply is not None

    def body_forces(self, x: np.ndarray, t: float, n: int) -> np.ndarray:
        if self.body_force is None:
            return np.zeros((n, x.size))
        return np.broadcast_to(self.body_force(x, t), (n, x.size))

    def supply(self, x: np.ndarray, t: float) -> np.ndarray:
        if self.heat_supply is None:
            return np.zeros(x.size)
        return np.broadcast_to(self.heat_supply(x, t), (x.size,))


@dataclass(frozen=True)
class SineForce:
    """``amplitude_i * sin(2 pi mode x / length)``, picklable for worker processes."""

    amplitude: tuple[float, ...]
    mode: int
    length: float

    def __call__(self, x: np.ndarray, t: float) -> np.ndarray:
        wave = np.sin(2 * np.pi * self.mode * x / self.length)
        return np.asarray(self.amplitude)[:, None] * wave[None, :]


@dataclass(frozen=True)
class SineSupply:
    amplitude: float
    mode: int
    length: float

    def __call__(self, x: np.ndarray, t: float) -> np.ndarray:
        return self.amplitude * np.sin(2 * np.pi * self.mode * x / self.length)
