import math

import numpy as np
import pytest

from friction_lab import class1, diagnostics
from friction_lab.diagnostics import (
    GronwallFit,
    entropy_production,
    fit_gronwall,
    lift,
    pointwise_distance,
    relative_entropy,
    sample_coercivity,
)
from friction_lab.state import Grid1D, StateI, StateII

from tests.utils import random_states


def perturbed_pair(grid, scale=0.1, seed=0):
    rng = np.random.default_rng(seed)
    rho = 1.0 + 0.2 * rng.random((2, grid.ncells))
    theta = 1.0 + 0.2 * rng.random(grid.ncells)
    v = rng.normal(size=(2, grid.ncells))
    base = StateII(rho=rho, v=v, theta=theta)
    other = StateII(
        rho=rho * (1 + scale * rng.normal(size=rho.shape)),
        v=v + scale * rng.normal(size=v.shape),
        theta=theta * (1 + scale * rng.normal(size=theta.shape)),
    )
    return other, base


def test_lift_uses_species_velocities():
    rho = np.ones((2, 4))
    state = StateI(rho=rho, v=np.full(4, 0.5), theta=np.ones(4), u=np.array([[0.1] * 4, [-0.1] * 4]))
    lifted = lift(state)
    np.testing.assert_allclose(lifted.v, [[0.6] * 4, [0.4] * 4])
    assert lifted.rho is state.rho


def test_identical_states_have_zero_relative_entropy(thermo, friction, sources, grid):
    rho, theta = random_states(2, grid.ncells, seed=3)
    state = StateII(rho=rho, v=np.zeros_like(rho), theta=theta)
    report = relative_entropy(state, state, thermo, grid, friction, sources)
    assert report.H == 0.0
    assert report.friction_dissipation == 0.0
    assert report.conduction_dissipation == 0.0
    assert report.coercivity_margin == 0.0
    assert math.isnan(report.R_norm)


def test_relative_entropy_is_positive_and_quadratic(thermo, friction, sources, grid):
    small = relative_entropy(*perturbed_pair(grid, 1e-3), thermo, grid, friction, sources)
    large = relative_entropy(*perturbed_pair(grid, 2e-3), thermo, grid, friction, sources)
    assert small.H > 0
    assert large.H / small.H == pytest.approx(4.0, rel=1e-2)


def test_relative_entropy_rejects_mismatched_grids(thermo, friction, sources):
    a = StateII(rho=np.ones((2, 8)), v=np.zeros((2, 8)), theta=np.ones(8))
    b = StateII(rho=np.ones((2, 16)), v=np.zeros((2, 16)), theta=np.ones(16))
    with pytest.raises(ValueError):
        relative_entropy(a, b, thermo, Grid1D(ncells=8), friction, sources)


def test_friction_dissipation_two_species(friction):
    lifted = StateII(rho=np.ones((2, 1)), v=np.zeros((2, 1)), theta=np.full(1, 2.0))
    state = StateII(rho=np.array([[1.0], [3.0]]), v=np.array([[0.5], [-0.5]]), theta=np.ones(1))
    density = diagnostics.friction_dissipation_density(state, lifted, friction)
    # theta_bar b rho1 rho2 (dv1 - dv2)^2 / eps, each pair counted once
    assert density[0] == pytest.approx(2.0 * 1.0 * 3.0 * 1.0 / 1e-2)


def test_entropy_production_is_nonnegative(thermo, friction, sources, grid):
    state, _ = perturbed_pair(grid)
    production = entropy_production(state, grid, thermo, friction, sources)
    assert production.conduction > 0
    assert production.friction > 0
    assert production.supply == 0.0
    assert production.dissipation == production.conduction + production.friction
    assert production.total_entropy == pytest.approx(
        diagnostics.total_entropy(state, thermo, grid)
    )


def test_entropy_production_of_class1_uses_diffusion_velocities(thermo, friction, sources, grid):
    ones = np.ones(grid.ncells)
    state = class1.make_state(
        np.stack([ones, ones]), 5.0 * ones, ones, grid, thermo, friction, sources
    )
    production = entropy_production(state, grid, thermo, friction, sources)
    assert production.friction == 0.0
    assert production.conduction == 0.0


def test_sample_coercivity(thermo):
    report = sample_coercivity(thermo, samples=2000, seed=5)
    assert report.passed
    assert report.infimum > 0
    with pytest.raises(ValueError):
        sample_coercivity(thermo, samples=0)


def test_gronwall_envelope_holds():
    t = np.linspace(0, 1, 11)
    series = {
        eps: (t, eps * (0.5 + t) * np.exp(0.3 * t)) for eps in (1e-1, 1e-2, 1e-3)
    }
    fit = fit_gronwall(series)
    assert fit.C >= 0
    for eps, (times, values) in series.items():
        assert np.all(values <= fit.envelope(times, eps, H0=values[0]) * (1 + 1e-12))


def test_gronwall_without_growth():
    fit = fit_gronwall({1e-2: ([0.0, 1.0], [0.0, 0.0])})
    assert fit == GronwallFit(C=0.0, K=0.0)


def test_pointwise_distance():
    a = StateII(rho=np.ones((2, 3)), v=np.zeros((2, 3)), theta=np.ones(3))
    b = StateII(rho=np.ones((2, 3)), v=np.zeros((2, 3)), theta=np.array([1.0, 1.5, 0.75]))
    assert pointwise_distance(a, b) == 0.5
