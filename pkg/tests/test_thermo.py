import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from friction_lab.diagnostics import thermal_relative_entropy
from friction_lab.errors import DomainError
from friction_lab.state import StateII
from friction_lab.thermo import (
    ThermoModel,
    ValidityDomain,
    audit_consistency,
    check_stability,
    clamp_density,
    entropy_density,
    eval_species,
    free_energy_density,
    pressure,
    relative_entropy_density,
    relative_free_energy,
    relative_quantity,
    sample_states,
)

positive = st.floats(min_value=0.1, max_value=10.0)


@given(rho=positive, theta=positive)
def test_gibbs_duhem(rho, theta):
    model = ThermoModel(R=[0.7], c=[2.1])
    ev = eval_species(model, 0, rho, theta)
    assert rho * ev.psi + ev.p == pytest.approx(rho * ev.mu, rel=1e-12, abs=1e-12)
    assert ev.p == pytest.approx(0.7 * rho * theta, rel=1e-12)
    assert ev.e == pytest.approx(2.1 * theta, rel=1e-12)


@pytest.mark.parametrize("rho,theta", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0)])
def test_eval_species_rejects_vacuum(thermo, rho, theta):
    with pytest.raises(DomainError):
        eval_species(thermo, 0, rho, theta)


def test_vacuum_limits(thermo):
    assert free_energy_density(thermo, 0, 0.0, 1.3) == 0.0
    assert entropy_density(thermo, 1, 0.0, 1.3) == 0.0
    with pytest.raises(DomainError):
        free_energy_density(thermo, 0, -1e-3, 1.0)


def test_pressure_shape(thermo):
    rho = np.ones((2, 5))
    p = pressure(thermo, rho, np.full(5, 2.0))
    np.testing.assert_allclose(p, [[2.0] * 5, [1.0] * 5])


def test_sound_speed(thermo):
    a = thermo.sound_speed(np.array([1.0, 4.0]))
    assert a.shape == (2, 2)
    np.testing.assert_allclose(a[:, 1], 2 * a[:, 0])
    assert a[0, 0] == pytest.approx(np.sqrt(1.0 * (1 + 1.0 / 1.5)))


@given(rho_bar=positive, theta_bar=positive)
def test_relative_quantities_vanish_on_the_diagonal(rho_bar, theta_bar):
    model = ThermoModel(R=[1.0], c=[1.5])
    same = relative_free_energy(model, 0, (rho_bar, theta_bar), (rho_bar, theta_bar))
    assert abs(same) <= 1e-12 * max(1.0, abs(rho_bar * theta_bar * np.log(rho_bar)))
    for kind in ("pressure", "entropy_density"):
        value = relative_quantity(kind, model, 0, (rho_bar, theta_bar), (rho_bar, theta_bar))
        assert abs(value) <= 1e-12 * max(1.0, rho_bar * theta_bar * 20)


def test_relative_pressure_is_bilinear_remainder(thermo):
    value = relative_quantity("pressure", thermo, 0, (2.0, 3.0), (1.0, 1.0))
    # R (rho - rho_bar)(theta - theta_bar)
    assert value == pytest.approx(2.0)


def test_relative_quantity_unknown_kind(thermo):
    with pytest.raises(ValueError):
        relative_quantity("volume", thermo, 0, (1.0, 1.0), (1.0, 1.0))


@settings(max_examples=50)
@given(seed=st.integers(0, 2**32 - 1))
def test_closed_form_matches_taylor_remainder(seed):
    model = ThermoModel(R=[1.0, 0.5, 2.0], c=[1.5, 2.5, 3.0])
    rng = np.random.default_rng(seed)
    rho, rho_bar = rng.uniform(0.1, 10, (2, 3, 16))
    theta, theta_bar = rng.uniform(0.1, 10, (2, 16))
    zeros = np.zeros_like(rho)
    generic = thermal_relative_entropy(
        StateII(rho=rho, v=zeros, theta=theta), StateII(rho=rho_bar, v=zeros, theta=theta_bar), model
    )
    closed = relative_entropy_density(model, (rho, theta), (rho_bar, theta_bar))
    scale = np.sum(rho + rho_bar, axis=0) * (theta + theta_bar) * 30
    assert np.all(np.abs(generic - closed) <= 1e-12 * scale)
    assert np.all(closed >= -1e-14 * scale)


def test_closed_form_is_exactly_zero_on_the_diagonal(thermo):
    rho = np.array([[0.3, 2.0], [1.5, 0.2]])
    theta = np.array([0.7, 4.0])
    assert np.all(relative_entropy_density(thermo, (rho, theta), (rho, theta)) == 0.0)


def test_clamp_density(thermo):
    rho, count = clamp_density(thermo, np.array([[0.0, 1.0], [1e-20, 2.0]]))
    assert count == 2
    assert rho.min() == thermo.rho_floor


def test_check_stability(thermo):
    report = check_stability(thermo, samples=500, seed=1)
    assert report.passed
    assert report.violations == 0
    assert report.min_rho_rho > 0
    assert report.max_theta_theta < 0
    assert report.min_rho_rho_fd == pytest.approx(report.min_rho_rho, rel=1e-3)


def test_audit_consistency(thermo):
    report = audit_consistency(thermo, samples=10, seed=3)
    assert report.gibbs_duhem <= 1e-12
    assert report.mu_order >= 1.9
    assert report.eta_order >= 1.9
    assert report.passed


@pytest.mark.parametrize("samples", [0, -3])
def test_sampling_needs_samples(thermo, samples):
    with pytest.raises(ValueError):
        check_stability(thermo, samples)
    with pytest.raises(ValueError):
        audit_consistency(thermo, samples)


def test_model_validation():
    with pytest.raises(ValueError):
        ThermoModel(R=[1.0], c=[1.0, 2.0])
    with pytest.raises(ValueError):
        ValidityDomain(gamma=2.0, M=1.0)
    assert ValidityDomain().contains([0.05, 1.0, 11.0]).tolist() == [False, True, False]


def test_closed_forms_at_a_point():
    model = ThermoModel(R=[2.0], c=[3.0])
    ev = eval_species(model, 0, np.e, 1.0)
    assert ev.p == pytest.approx(2 * np.e, rel=1e-14)
    assert ev.e == pytest.approx(3.0, rel=1e-14)


@pytest.mark.parametrize("single,shape", [(False, (2, 40)), (True, (40,))])
def test_sample_states(thermo, single, shape):
    rho, theta = sample_states(thermo, 40, np.random.default_rng(0), single=single)
    assert rho.shape == shape
    assert theta.shape == (40,)
    assert np.all(thermo.validity.contains(rho))
    assert np.all(thermo.validity.contains(theta))
