import numpy as np
import pytest

from friction_lab.initial import class1_initial, class2_initial, paired_initial, profiles


@pytest.mark.parametrize("preset", ["uniform", "sine_wave", "gaussian_bump", "two_state"])
def test_presets_stay_positive(make_config, preset):
    config = make_config(ic={"preset": preset, "temperature_amplitude": 0.2})
    rho, v, theta = profiles(config.ic, config.grid)
    assert rho.shape == (2, 32)
    assert np.all(rho > 0)
    assert np.all(theta > 0)
    np.testing.assert_array_equal(v, 0.0)


def test_sharp_two_state(make_config):
    config = make_config(ic={"preset": "two_state", "width": 0.0, "centre": 0.5})
    rho, _, _ = profiles(config.ic, config.grid)
    assert set(np.round(rho[0], 12)) == {1.0, 1.1}
    assert np.count_nonzero(rho[0] > 1.05) == 16


def test_gaussian_bump_is_periodic(make_config):
    config = make_config(ic={"preset": "gaussian_bump", "centre": 0.0, "width": 0.1})
    rho, _, _ = profiles(config.ic, config.grid)
    np.testing.assert_allclose(rho[0], rho[0][::-1], rtol=1e-14)


def test_class1_initial_uses_barycentric_velocity(make_config):
    config = make_config(ic={"velocities": [0.4, -0.1]})
    state = class1_initial(config)
    rho = class2_initial(config).rho
    expected = (0.4 * rho[0] - 0.1 * rho[1]) / rho.sum(axis=0)
    np.testing.assert_allclose(state.v, expected, rtol=1e-14)
    np.testing.assert_allclose(np.sum(state.rho * state.u, axis=0), 0.0, atol=1e-14)


def test_well_prepared_pair(make_config):
    state2, state1 = paired_initial(make_config())
    np.testing.assert_array_equal(state2.v, state1.v[None, :] + state1.u)
    np.testing.assert_array_equal(state2.theta, state1.theta)


def test_ill_prepared_pair_keeps_barycentric_velocity(make_config):
    config = make_config(ic={"well_prepared": False, "velocity_mismatch": [0.5, -0.5]})
    state2, state1 = paired_initial(config)
    np.testing.assert_allclose(state2.rho, state1.rho)
    np.testing.assert_allclose(state2.barycentric_velocity, state1.v, atol=1e-14)
    gap = state2.v - state1.species_velocities
    np.testing.assert_allclose(gap[0] - gap[1], 1.0, rtol=1e-14)
