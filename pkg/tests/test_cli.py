import toml

from friction_lab import cli, labcfg
from friction_lab._utils import CONFIG_FILE
from friction_lab.config import RunConfig
from friction_lab.errors import AcceptanceError, ConfigError, DomainError, StiffnessError
from tests.utils import run_flab


def write_config(tmp_path, config: RunConfig, name: str = "run.toml"):
    path = tmp_path / name
    path.write_text(toml.dumps(config.model_dump(mode="json", exclude_none=True)))
    return path


def test_init(tmp_path, monkeypatch, testing_labcfg):
    monkeypatch.chdir(tmp_path)
    assert run_flab("flab init") == 0
    assert (tmp_path / "run.toml").exists()
    assert "[cli]" in (tmp_path / CONFIG_FILE).read_text()
    run = RunConfig.load(tmp_path / "run.toml")
    assert run.friction.epsilon_sweep == [1e-1, 1e-2, 1e-3]
    assert run_flab("flab init") == 1


def test_simulate_and_plot(tmp_path, make_config, testing_labcfg):
    path = write_config(tmp_path, make_config())
    assert run_flab(f"flab simulate --config {path} --model class1") == 0
    snapshots = tmp_path / "out" / "class1_snapshots.csv"
    assert snapshots.exists()
    assert run_flab(f"flab plot --csv {snapshots}") == 0
    assert snapshots.with_suffix(".dat").exists()
    assert testing_labcfg.cli.log_file.resolved_path.exists()


def test_paired(tmp_path, make_config, testing_labcfg, capsys):
    path = write_config(tmp_path, make_config())
    assert run_flab(f"flab paired --config {path}") == 0
    assert "H(0) = 0.0" in capsys.readouterr().out


def test_validation_failures(tmp_path, make_config, testing_labcfg):
    path = write_config(tmp_path, make_config())
    assert run_flab(f"flab simulate --config {path} --model class3") == 1
    assert run_flab(f"flab paired --config {tmp_path / 'missing.toml'}") == 1
    bad = tmp_path / "bad.toml"
    bad.write_text("[grid]\nncells = 2\n")
    assert run_flab(f"flab paired --config {bad}") == 1


def test_domain_failure(tmp_path, make_config, testing_labcfg):
    hot = make_config(ic={"temperature": 9.5, "temperature_amplitude": 0.1})
    path = write_config(tmp_path, hot)
    assert run_flab(f"flab simulate --config {path}") == 2


def test_acceptance_failure(tmp_path, make_config, testing_labcfg):
    config = make_config(
        friction={"epsilon_sweep": [1e-1, 1e-2, 1e-3]}, sweep={"slope_threshold": 10.0}
    )
    path = write_config(tmp_path, config)
    assert run_flab(f"flab sweep --config {path}") == 3
    assert (tmp_path / "out" / "sweep.json").exists()


def test_audits(tmp_path, make_config, testing_labcfg):
    assert run_flab("flab check-thermo --samples 50 --seed 1") == 0
    path = write_config(tmp_path, make_config(identity={"pairs": ["identical"]}))
    assert run_flab(f"flab check-identity --config {path}") == 0


def test_exit_codes():
    assert cli.exit_code(ConfigError("x")) == 1
    assert cli.exit_code(DomainError("x")) == 2
    assert cli.exit_code(StiffnessError("x")) == 2
    assert cli.exit_code(AcceptanceError("x")) == 3
    assert cli.exit_code(RuntimeError("x")) == 1


def test_config_command():
    assert cli.config() is labcfg
