"""Ideal-gas constitutive closure for the mixture.

Species ``i`` carries the Helmholtz free energy density
``rho_i psi_i = R_i theta rho_i log(rho_i) - c_i theta rho_i log(theta)``.
Everything else (chemical potential, entropy, internal energy, partial
pressure and the relative quantities used by the diagnostics) is derived
from it in closed form.
"""

from __future__ import annotations

from typing import Annotated, Literal, NamedTuple, Optional, Union

import mpmath
import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, model_validator
from scipy.special import xlogy

from .errors import DomainError

ArrayLike = Union[float, np.ndarray]
ThermoState = tuple[ArrayLike, ArrayLike]


class ValidityDomain(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    gamma: Annotated[
        float,
        Field(
            gt=0,
            description="lower bound for species density, total density and temperature",
        ),
    ] = 0.1
    M: Annotated[
        float,
        Field(gt=0, description="upper bound for the same quantities"),
    ] = 10.0

    @model_validator(mode="after")
    def gamma_below_M(self):
        if not self.gamma < self.M:
            raise ValueError(f"validity needs gamma < M, got {self.gamma} >= {self.M}")
        return self

    def contains(self, value: ArrayLike) -> np.ndarray:
        value = np.asarray(value)
        return (value >= self.gamma) & (value <= self.M)


class ThermoModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    R: Annotated[list[PositiveFloat], Field(description="specific gas constants")]
    c: Annotated[list[PositiveFloat], Field(description="specific heats")]
    validity: ValidityDomain = Field(default_factory=ValidityDomain)
    rho_floor: Annotated[
        float, Field(gt=0, description="density floor used before taking logs")
    ] = 1e-12

    @model_validator(mode="after")
    def same_species_count(self):
        if len(self.R) != len(self.c):
            raise ValueError(
                f"R and c must have one entry per species, got {len(self.R)} and {len(self.c)}"
            )
        if len(self.R) == 0:
            raise ValueError("at least one species is required")
        return self

    @property
    def n(self) -> int:
        return len(self.R)

    def coefficients(self, ndim: int = 2) -> tuple[np.ndarray, np.ndarray]:
        """``R`` and ``c`` shaped to broadcast against ``(n, ...)`` fields."""
        shape = (self.n,) + (1,) * max(ndim - 1, 0)
        return np.reshape(self.R, shape), np.reshape(self.c, shape)

    def sound_speed(self, theta: ArrayLike) -> np.ndarray:
        """Per-species sound speed proxy ``sqrt(R theta (1 + R / c))``, shape ``(n, ...)``."""
        theta = np.asarray(theta, dtype=float)
        R, c = self.coefficients(theta.ndim + 1)
        return np.sqrt(R * theta * (1.0 + R / c))


class SpeciesThermoEval(NamedTuple):
    psi: ArrayLike
    mu: ArrayLike
    eta: ArrayLike
    e: ArrayLike
    p: ArrayLike


def _require_positive(name: str, value: ArrayLike, strict: bool = True):
    value = np.asarray(value)
    bad = value <= 0 if strict else value < 0
    if np.any(bad):
        cell = int(np.flatnonzero(bad)[0]) if value.ndim > 0 else None
        bound = "positive" if strict else "nonnegative"
        raise DomainError(f"{name} must be {bound}", cell=cell, field=name)


def eval_species(
    model: ThermoModel, i: int, rho_i: ArrayLike, theta: ArrayLike
) -> SpeciesThermoEval:
    _require_positive("rho_i", rho_i)
    _require_positive("theta", theta)
    R, c = model.R[i], model.c[i]
    log_rho = np.log(rho_i)
    log_theta = np.log(theta)
    psi = R * theta * log_rho - c * theta * log_theta
    mu = psi + R * theta
    eta = -R * log_rho + c * log_theta + c
    e = psi + theta * eta
    p = rho_i * mu - rho_i * psi
    return SpeciesThermoEval(psi=psi, mu=mu, eta=eta, e=e, p=p)


def free_energy_density(
    model: ThermoModel, i: int, rho_i: ArrayLike, theta: ArrayLike
) -> ArrayLike:
    """``rho_i psi_i``; continuous at ``rho_i = 0``."""
    _require_positive("rho_i", rho_i, strict=False)
    _require_positive("theta", theta)
    R, c = model.R[i], model.c[i]
    return R * theta * xlogy(rho_i, rho_i) - c * theta * rho_i * np.log(theta)


def entropy_density(
    model: ThermoModel, i: int, rho_i: ArrayLike, theta: ArrayLike
) -> ArrayLike:
    """``rho_i eta_i``; continuous at ``rho_i = 0``."""
    _require_positive("rho_i", rho_i, strict=False)
    _require_positive("theta", theta)
    R, c = model.R[i], model.c[i]
    return -R * xlogy(rho_i, rho_i) + c * rho_i * (np.log(theta) + 1.0)


def pressure(model: ThermoModel, rho: np.ndarray, theta: ArrayLike) -> np.ndarray:
    """Partial pressures ``R_i rho_i theta`` for fields of shape ``(n, ...)``."""
    R, _ = model.coefficients(np.ndim(rho))
    return R * rho * theta


def internal_energy_density(
    model: ThermoModel, rho: np.ndarray, theta: ArrayLike
) -> np.ndarray:
    _, c = model.coefficients(np.ndim(rho))
    return c * rho * theta


def heat_capacity(model: ThermoModel, rho: np.ndarray) -> np.ndarray:
    """Mixture heat capacity per volume ``sum_i rho_i c_i``."""
    _, c = model.coefficients(np.ndim(rho))
    return np.sum(c * rho, axis=0)


def clamp_density(model: ThermoModel, rho: np.ndarray) -> tuple[np.ndarray, int]:
    """Raise species densities to ``rho_floor``; returns the clamped field and
    how many entries were touched."""
    rho = np.asarray(rho, dtype=float)
    low = rho < model.rho_floor
    count = int(np.count_nonzero(low))
    if count:
        logger.debug(f"clamped {count} species densities to {model.rho_floor:g}")
        rho = np.where(low, model.rho_floor, rho)
    return rho, count


def free_energy_hessian(
    model: ThermoModel, i: int, rho_i: ArrayLike, theta: ArrayLike
) -> tuple[ArrayLike, ArrayLike, ArrayLike]:
    """Closed-form ``(f_rr, f_rt, f_tt)`` of ``f = rho_i psi_i``."""
    R, c = model.R[i], model.c[i]
    f_rr = R * theta / rho_i
    f_rt = R * np.log(rho_i) + R - c * np.log(theta) - c
    f_tt = -c * rho_i / theta
    return f_rr, f_rt, f_tt


def _check_pair(omega: ThermoState, omega_bar: ThermoState):
    rho, theta = omega
    rho_bar, theta_bar = omega_bar
    _require_positive("rho_i", rho, strict=False)
    _require_positive("rho_i_bar", rho_bar)
    _require_positive("theta", theta)
    _require_positive("theta_bar", theta_bar)


def relative_free_energy(
    model: ThermoModel, i: int, omega: ThermoState, omega_bar: ThermoState
) -> ArrayLike:
    """Quadratic Taylor remainder of ``rho_i psi_i`` at ``omega_bar`` evaluated at ``omega``."""
    _check_pair(omega, omega_bar)
    rho, theta = omega
    rho_bar, theta_bar = omega_bar
    bar = eval_species(model, i, rho_bar, theta_bar)
    return (
        free_energy_density(model, i, rho, theta)
        - rho_bar * bar.psi
        - bar.mu * (rho - rho_bar)
        + rho_bar * bar.eta * (theta - theta_bar)
    )


def relative_quantity(
    kind: Literal["pressure", "entropy_density"],
    model: ThermoModel,
    i: int,
    omega: ThermoState,
    omega_bar: ThermoState,
) -> ArrayLike:
    _check_pair(omega, omega_bar)
    rho, theta = omega
    rho_bar, theta_bar = omega_bar
    R, c = model.R[i], model.c[i]
    d_rho = rho - rho_bar
    d_theta = theta - theta_bar
    if kind == "pressure":
        p = R * rho * theta
        p_bar = R * rho_bar * theta_bar
        return p - p_bar - R * theta_bar * d_rho - R * rho_bar * d_theta
    if kind == "entropy_density":
        s = entropy_density(model, i, rho, theta)
        s_bar = entropy_density(model, i, rho_bar, theta_bar)
        s_rho = -R * np.log(rho_bar) - R + c * np.log(theta_bar) + c
        s_theta = c * rho_bar / theta_bar
        return s - s_bar - s_rho * d_rho - s_theta * d_theta
    raise ValueError(f"unknown relative quantity {kind!r}")


def relative_entropy_density(
    model: ThermoModel, omega: ThermoState, omega_bar: ThermoState
) -> np.ndarray:
    """Thermal part of the relative entropy summed over species, in closed form.

    ``sum_i R_i theta_bar (rho_i log(rho_i/rho_bar_i) - rho_i + rho_bar_i)
    + sum_i c_i rho_i (theta - theta_bar - theta_bar log(theta/theta_bar))``.
    ``rho`` and ``rho_bar`` have shape ``(n, ...)``.
    """
    rho, theta = omega
    rho_bar, theta_bar = omega_bar
    rho = np.asarray(rho, dtype=float)
    _check_pair((rho, theta), (rho_bar, theta_bar))
    R, c = model.coefficients(rho.ndim)
    chemical = R * theta_bar * (xlogy(rho, rho) - xlogy(rho, rho_bar) - rho + rho_bar)
    thermal = c * rho * (theta - theta_bar - theta_bar * np.log(theta / theta_bar))
    return np.sum(chemical + thermal, axis=0)


class StabilityReport(BaseModel):
    samples: int
    seed: int
    min_rho_rho: float = Field(description="min of (rho psi)_rho_rho, closed form")
    min_rho_rho_fd: float = Field(description="min of (rho psi)_rho_rho, finite differences")
    max_theta_theta: float = Field(description="max of (rho psi)_theta_theta, closed form")
    max_theta_theta_fd: float = Field(
        description="max of (rho psi)_theta_theta, finite differences"
    )
    violations: int
    passed: bool


def sample_states(
    model: ThermoModel, samples: int, rng: np.random.Generator, single: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform states in the validity domain: densities of shape ``(n, samples)``,
    or ``(samples,)`` for one species with ``single``, and temperatures."""
    lo, hi = model.validity.gamma, model.validity.M
    shape = samples if single else (model.n, samples)
    return rng.uniform(lo, hi, shape), rng.uniform(lo, hi, samples)


def check_stability(model: ThermoModel, samples: int, seed: int = 0) -> StabilityReport:
    """Sample the validity domain and check the Gibbs stability signs."""
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    rng = np.random.default_rng(seed)
    min_rr = min_rr_fd = np.inf
    max_tt = max_tt_fd = -np.inf
    violations = 0
    for i in range(model.n):
        rho, theta = sample_states(model, samples, rng, single=True)
        f_rr, _, f_tt = free_energy_hessian(model, i, rho, theta)

        def f(r, t):
            return model.R[i] * t * r * np.log(r) - model.c[i] * t * r * np.log(t)

        h_r = 1e-4 * rho
        h_t = 1e-4 * theta
        f0 = f(rho, theta)
        f_rr_fd = (f(rho + h_r, theta) - 2 * f0 + f(rho - h_r, theta)) / h_r**2
        f_tt_fd = (f(rho, theta + h_t) - 2 * f0 + f(rho, theta - h_t)) / h_t**2

        min_rr = min(min_rr, float(f_rr.min()))
        min_rr_fd = min(min_rr_fd, float(f_rr_fd.min()))
        max_tt = max(max_tt, float(f_tt.max()))
        max_tt_fd = max(max_tt_fd, float(f_tt_fd.max()))
        bad = (f_rr <= 0) | (f_tt >= 0) | (f_rr_fd <= 0) | (f_tt_fd >= 0)
        violations += int(np.count_nonzero(bad))
    return StabilityReport(
        samples=samples,
        seed=seed,
        min_rho_rho=min_rr,
        min_rho_rho_fd=min_rr_fd,
        max_theta_theta=max_tt,
        max_theta_theta_fd=max_tt_fd,
        violations=violations,
        passed=violations == 0,
    )


class ConsistencyReport(BaseModel):
    samples: int
    seed: int
    gibbs_duhem: float = Field(description="max relative Gibbs-Duhem residual")
    mu_order: float = Field(description="min observed order of the mu difference quotient")
    eta_order: float = Field(description="min observed order of the eta difference quotient")
    steps: list[float]
    passed: bool


def _observed_order(errors: list, steps: list[float]) -> float:
    orders = [
        float(mpmath.log(errors[k] / errors[k + 1]) / mpmath.log(steps[k] / steps[k + 1]))
        for k in range(len(steps) - 1)
    ]
    return min(orders)


def audit_consistency(
    model: ThermoModel,
    samples: int,
    seed: int = 0,
    steps: Optional[list[float]] = None,
    min_order: float = 1.9,
    tolerance: float = 1e-12,
) -> ConsistencyReport:
    """Gibbs-Duhem residuals and the convergence order of the closed-form
    ``mu``/``eta`` against central differences of ``rho psi``.

    The difference quotients are evaluated in 40-digit arithmetic so that the
    truncation error, not cancellation, is what gets measured at small steps.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    steps = steps or [1e-2, 1e-3, 1e-4]
    rng = np.random.default_rng(seed)
    worst_gd = 0.0
    mu_order = eta_order = np.inf
    with mpmath.workdps(40):
        for i in range(model.n):
            R, c = mpmath.mpf(model.R[i]), mpmath.mpf(model.c[i])

            def f(r, t):
                return R * t * r * mpmath.log(r) - c * t * r * mpmath.log(t)

            rho, theta = sample_states(model, samples, rng, single=True)
            ev = eval_species(model, i, rho, theta)
            gd = np.abs(rho * ev.psi + ev.p - rho * ev.mu) / np.maximum(
                1.0, np.abs(rho * ev.mu)
            )
            worst_gd = max(worst_gd, float(gd.max()))
            for r, t, mu, eta in zip(rho, theta, ev.mu, ev.eta):
                r_mp, t_mp = mpmath.mpf(r), mpmath.mpf(t)
                mu_err, eta_err = [], []
                for h in steps:
                    h_mp = mpmath.mpf(h)
                    d_rho = (f(r_mp + h_mp, t_mp) - f(r_mp - h_mp, t_mp)) / (2 * h_mp)
                    d_theta = (f(r_mp, t_mp + h_mp) - f(r_mp, t_mp - h_mp)) / (2 * h_mp)
                    mu_err.append(abs(d_rho - mpmath.mpf(mu)))
                    eta_err.append(abs(-d_theta / r_mp - mpmath.mpf(eta)))
                mu_order = min(mu_order, _observed_order(mu_err, steps))
                eta_order = min(eta_order, _observed_order(eta_err, steps))
    return ConsistencyReport(
        samples=samples,
        seed=seed,
        gibbs_duhem=worst_gd,
        mu_order=mu_order,
        eta_order=eta_order,
        steps=steps,
        passed=worst_gd <= tolerance and min(mu_order, eta_order) >= min_order,
    )
