import copy
import shlex
import sys
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest
from pydantic import BaseModel

from friction_lab import labcfg
from friction_lab.cli import LabConfig, console_main
from friction_lab.config import RunConfig
from friction_lab.maxwell_stefan import FrictionMatrix
from friction_lab.sources import KappaModel, Sources
from friction_lab.state import Grid1D
from friction_lab.thermo import ThermoModel


class MockLabcfg:
    def __init__(self, /, **kwargs):
        self._config = kwargs

    def __enter__(self):
        self._old = copy.copy(labcfg)
        for k, v in self._config.items():
            cls = type(getattr(labcfg, k))
            if issubclass(cls, BaseModel):
                setattr(labcfg, k, cls.model_validate(v))
            else:
                setattr(labcfg, k, v)

        LabConfig.model_validate(labcfg.model_dump())
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        for k in self._config.keys():
            setattr(labcfg, k, getattr(self._old, k))
        return False


@pytest.fixture
def testing_labcfg(tmp_path):
    with MockLabcfg(
        cli=dict(log_file=dict(path=tmp_path / "log" / "flab.log", unified=False)),
        executor=dict(name="serial", workers=1),
    ):
        yield labcfg


def run_flab(cmd: str) -> int:
    """Run a flab command line in-process and return its exit status."""
    with patch.object(sys, "argv", shlex.split(cmd)):
        try:
            console_main()
        except SystemExit as e:
            return int(e.code or 0)
    return 0


@pytest.fixture
def thermo() -> ThermoModel:
    return ThermoModel(R=[1.0, 0.5], c=[1.5, 2.5])


@pytest.fixture
def friction() -> FrictionMatrix:
    return FrictionMatrix.from_upper([1.0], 2, 1e-2)


@pytest.fixture
def grid() -> Grid1D:
    return Grid1D(ncells=32)


@pytest.fixture
def sources() -> Sources:
    return Sources(kappa=KappaModel(kappa=1e-3))


def small_config(directory: Path, **blocks) -> RunConfig:
    """A fast two-species run writing into ``directory``; ``blocks`` update sections."""
    data = {
        "species": {"n": 2, "R": [1.0, 0.5], "c": [1.5, 2.5]},
        "grid": {"ncells": 32},
        "ic": {"densities": [1.0, 0.8], "amplitudes": [0.1, -0.1]},
        "time": {"t_end": 0.02, "snapshot_interval": 0.01},
        "outputs": {"directory": str(directory)},
    }
    for name, update in blocks.items():
        data.setdefault(name, {}).update(update)
    return RunConfig.model_validate(data)


@pytest.fixture
def make_config(tmp_path):
    def factory(**blocks) -> RunConfig:
        return small_config(tmp_path / "out", **blocks)

    return factory


def random_states(n: int, ncells: int, seed: int, lo: float = 0.2, hi: float = 5.0):
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, (n, ncells)), rng.uniform(lo, hi, ncells)
