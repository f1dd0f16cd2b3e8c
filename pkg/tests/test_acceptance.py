"""Desk-scale experiments, deselected by default. Run with ``pytest -m slow``."""

import numpy as np
import pytest

from friction_lab import class1, output
from friction_lab.executor import ProcessExecutor
from friction_lab.harness import fit_rate, run_single, run_sweep
from friction_lab.initial import class1_initial

pytestmark = pytest.mark.slow


def smooth(make_config, **blocks):
    base = dict(
        grid={"ncells": 256},
        ic={"temperature_amplitude": 0.05},
        time={"t_end": 0.5, "snapshot_interval": 0.1, "friction_cfl": 0.45},
        friction={"epsilon_sweep": [1e-1, 1e-2, 1e-3]},
    )
    for name, update in blocks.items():
        base.setdefault(name, {}).update(update)
    return make_config(**base)


def test_relative_entropy_scales_with_epsilon(make_config):
    result = run_sweep(smooth(make_config), ProcessExecutor(workers=4))
    assert all(m.status == "ok" for m in result.members)
    assert result.fit.slope >= 0.8
    # the stiffest member resolves its relaxation time over about 2000 steps
    assert result.members[-1].steps >= 1900
    assert result.passed
    assert result.monotone


def test_residual_orders(make_config):
    config = smooth(make_config, grid={"ncells": 128})
    points_R, points_Q = [], []
    thermo, sources, grid = config.thermo_model(), config.source_terms(), config.grid
    # one step size for every member, limited by the most diffusive one
    widest = config.friction_matrix(1e-1)
    dt = class1.cfl_dt(class1_initial(config, 1e-1), grid, thermo, widest, sources, 0.25)
    for eps in (1e-1, 1e-2, 1e-3, 1e-4):
        friction = config.friction_matrix(eps)
        history = [class1_initial(config, eps)]
        for k in range(2):
            history.append(class1.step(history[-1], grid, thermo, friction, sources, dt, k * dt))
        R, Q = class1.residuals(history, grid, dt).norms(grid)
        points_R.append((eps, R))
        points_Q.append((eps, Q))
    assert fit_rate(points_R).slope == pytest.approx(1.0, abs=0.2)
    assert fit_rate(points_Q).slope == pytest.approx(2.0, abs=0.2)


@pytest.mark.parametrize("model", ["class1", "class2"])
def test_entropy_budget(make_config, model):
    config = smooth(make_config, time={"t_end": 0.2})
    result = run_single(config, model)
    _, data = output.read_csv(result.files[1])
    assert np.all(data[:, 3] >= 0)
    assert np.all(data[:, 4] >= 0)
    assert result.entropy_violations == 0
