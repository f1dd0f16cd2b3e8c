import json
import math

import numpy as np
import pytest

from friction_lab import harness, output
from friction_lab.errors import ConfigError, DomainError
from friction_lab.executor import ProcessExecutor, SerialExecutor
from friction_lab.harness import fit_rate, march, output_times, run_paired, run_single, run_sweep


def test_output_times():
    assert output_times(0.2, 0.05) == pytest.approx([0.05, 0.1, 0.15, 0.2])
    assert output_times(0.12, 0.05) == pytest.approx([0.05, 0.1, 0.12])
    assert output_times(0.12, 0.05)[-1] == 0.12
    assert output_times(0.1, 0.1) == [0.1]


def test_march_lands_on_output_times():
    steps = list(march(0.1, 0.05, lambda: 0.03))
    assert [t for t, _, _ in steps] == pytest.approx([0.025, 0.05, 0.075, 0.1])
    assert [out for _, _, out in steps] == [False, True, False, True]
    assert steps[-1][0] == 0.1
    assert sum(dt for _, dt, _ in steps) == pytest.approx(0.1)


def test_fit_rate():
    eps = np.array([1e-1, 1e-2, 1e-3])
    fit = fit_rate(list(zip(eps, 3 * eps**2)))
    assert fit.slope == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(math.log(3))
    assert fit.residual == pytest.approx(0.0, abs=1e-12)
    assert fit.slope_stderr == pytest.approx(0.0, abs=1e-12)
    assert math.isnan(fit_rate([(1e-1, 1e-1), (1e-2, 1e-2)]).slope_stderr)


def test_fit_rate_with_noise():
    rng = np.random.default_rng(1)
    eps = np.logspace(-1, -4, 8)
    fit = fit_rate(list(zip(eps, eps * np.exp(0.05 * rng.normal(size=eps.size)))))
    assert abs(fit.slope - 1.0) <= 3 * fit.slope_stderr + 1e-3
    assert fit.residual > 0


@pytest.mark.parametrize(
    "points,error",
    [
        ([(1e-2, 1e-3)], ValueError),
        ([(1e-2, 1e-3), (1e-1, 0.0)], DomainError),
        ([(1e-2, 1e-3), (-1e-1, 1.0)], DomainError),
        ([(1e-2, 1e-3), (1e-1, math.nan)], DomainError),
    ],
)
def test_fit_rate_rejects(points, error):
    with pytest.raises(error):
        fit_rate(points)


def test_uniform_run(make_config):
    config = make_config(ic={"preset": "uniform"})
    result = run_single(config, "class2")
    assert result.steps > 0
    assert result.snapshot_times == pytest.approx([0.0, 0.01, 0.02])
    assert result.entropy_violations == 0
    assert [f.name for f in result.files] == ["class2_snapshots.csv", "class2_entropy.csv"]
    header, data = output.read_csv(result.files[0])
    assert header == ["t", "x", "rho_1", "rho_2", "v_1", "v_2", "theta"]
    assert data.shape == (3 * 32, 7)
    np.testing.assert_allclose(data[:, 2], 1.0, rtol=1e-13)


@pytest.mark.parametrize("model", ["class1", "class2"])
def test_runs_are_deterministic(tmp_path, make_config, model):
    first = run_single(make_config(outputs={"directory": str(tmp_path / "a")}), model)
    second = run_single(make_config(outputs={"directory": str(tmp_path / "b")}), model)
    for a, b in zip(first.files, second.files):
        assert a.read_bytes() == b.read_bytes()


def test_entropy_does_not_decrease(make_config):
    config = make_config(
        ic={"preset": "two_state", "width": 0.05, "temperature_amplitude": 0.1},
        time={"t_end": 0.05},
    )
    result = run_single(config, "class2")
    _, data = output.read_csv(result.files[1])
    total = data[:, 1]
    assert total[-1] >= total[0] - 1e-12 * abs(total[0])
    assert np.all(data[:, 3] >= 0)
    assert np.all(data[:, 4] >= 0)


def test_gnuplot_output(make_config):
    config = make_config(ic={"preset": "uniform"}, outputs={"formats": ["dat"]})
    result = run_single(config, "class1")
    assert [f.suffix for f in result.files] == [".dat", ".dat"]
    assert not (config.outputs.directory / "class1_snapshots.csv").exists()
    lines = result.files[0].read_text().splitlines()
    assert lines[0].startswith("# t x rho_1 rho_2 v theta u_1 u_2")
    # one block per snapshot
    assert lines.count("") == 2


def test_well_prepared_pair_starts_at_zero(make_config):
    result = run_paired(make_config())
    assert result.H0 == 0.0
    assert [r.t for r in result.reports] == pytest.approx([0.0, 0.01, 0.02])
    assert math.isnan(result.reports[0].R_norm)
    assert all(math.isfinite(r.R_norm) and math.isfinite(r.Q_norm) for r in result.reports[1:])
    assert result.H_end >= 0
    assert result.files[0].name == "relative_entropy_eps0.01.csv"


def test_paired_epsilon_override(make_config):
    result = run_paired(make_config(), epsilon=1e-3, write=False)
    assert result.epsilon == 1e-3
    assert result.files == []


def test_ill_prepared_pair_relaxes(make_config):
    config = make_config(
        ic={"well_prepared": False, "velocity_mismatch": [0.5, -0.5]},
        time={"t_end": 0.05},
    )
    result = run_paired(config, write=False)
    assert result.H0 > 0.01
    assert result.H_end < 0.1 * result.H0


def test_ill_prepared_pair_relaxes_at_friction_rate(make_config):
    """The mismatch kinetic energy decays like the squared velocity gap, at 2 lambda."""
    config = make_config(
        ic={"well_prepared": False, "velocity_mismatch": [0.1, -0.1]},
        time={"t_end": 0.006, "snapshot_interval": 0.0005, "friction_cfl": 0.1},
    )
    result = run_paired(config, write=False)
    lam = (
        config.ic.temperature * config.friction.b[0] * sum(config.ic.densities) / result.epsilon
    )
    times = [r.t for r in result.reports]
    slope = np.polyfit(times, np.log([r.H for r in result.reports]), 1)[0]
    assert len(times) >= 10
    assert -slope == pytest.approx(2 * lam, rel=0.1)


def test_sweep_needs_three_members(make_config):
    with pytest.raises(ConfigError):
        run_sweep(make_config(), SerialExecutor())


def sweep_config(make_config, directory):
    return make_config(
        friction={"epsilon_sweep": [1e-1, 1e-2, 1e-3]},
        outputs={"directory": str(directory)},
    )


def test_sweep(tmp_path, make_config, testing_labcfg):
    result = run_sweep(sweep_config(make_config, tmp_path / "s"))
    assert [m.epsilon for m in result.members] == [1e-1, 1e-2, 1e-3]
    assert all(m.status == "ok" for m in result.members)
    assert all(m.H0 == 0.0 for m in result.members)
    assert not result.ill_prepared
    assert result.fit is not None
    assert result.passed == (result.fit.slope >= result.threshold)
    summary = json.loads((tmp_path / "s" / "sweep.json").read_text())
    assert len(summary["members"]) == 3
    header, data = output.read_csv(tmp_path / "s" / "sweep.csv")
    assert header == list(harness.SWEEP_COLUMNS)
    assert data.shape == (3, len(header))


@pytest.mark.slow
def test_sweep_is_independent_of_workers(tmp_path, make_config):
    run_sweep(sweep_config(make_config, tmp_path / "serial"), SerialExecutor())
    run_sweep(sweep_config(make_config, tmp_path / "process"), ProcessExecutor(workers=4))
    for name in ("sweep.csv", "relative_entropy_eps0.001.csv"):
        assert (tmp_path / "serial" / name).read_bytes() == (
            tmp_path / "process" / name
        ).read_bytes()


def test_failed_member_is_reported(tmp_path, make_config):
    config = make_config(
        friction={"epsilon_sweep": [1e-1, 1e-2, 1e-3]},
        ic={"temperature": 9.5, "temperature_amplitude": 0.1},
        outputs={"directory": str(tmp_path / "f")},
    )
    with pytest.raises(DomainError):
        run_sweep(config, SerialExecutor())
    summary = json.loads((tmp_path / "f" / "sweep.json").read_text())
    assert {m["status"] for m in summary["members"]} == {"failed"}
    assert summary["fit"] is None


def test_identity_suite(make_config):
    config = make_config(identity={"pairs": ["identical", "drift"]})
    studies = harness.check_identity_suite(config)
    assert [s.pair for s in studies] == ["identical", "drift"]
    assert all(s.passed for s in studies)
    with pytest.raises(ConfigError):
        harness.check_identity_suite(make_config(identity={"pairs": ["nope"]}))


def test_thermo_audit(make_config):
    audit = harness.check_thermo(make_config(), samples=50, seed=2)
    assert audit.passed
    assert audit.coercivity.samples == 10_000
