import os
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Any, Optional

import toml
from pydantic import BaseModel, model_validator

CONFIG_ENV = "FLABCFG"
CONFIG_FILE = "flab_config.toml"

_ENCODER = toml.TomlEncoder()


def _comment(text: Optional[str]) -> list[str]:
    return [f"# {line}" for line in text.splitlines()] if text else []


def _table_lines(model: BaseModel, data: dict, name: list[str]) -> list[str]:
    """Scalars of ``model`` under ``[name]`` first, then one table per nested model."""
    fields = type(model).model_fields
    scalars, tables = [], []
    for key, value in data.items():
        child = getattr(model, key)
        if isinstance(child, BaseModel):
            tables.append((key, child, value))
            continue
        scalars += _comment(fields[key].description)
        scalars.append(f"{key} = {_ENCODER.dump_value(value)}")
    lines = []
    if scalars:
        if name:
            lines.append(f"[{'.'.join(name)}]")
        lines += scalars + [""]
    for key, child, value in tables:
        lines += _comment(fields[key].description)
        lines += _table_lines(child, value, [*name, key])
    return lines


def dumps_toml(arg: BaseModel, leading_sections: list, header: str = "") -> str:
    """TOML with field descriptions as comments. Unset optional fields are
    left out since TOML has no null."""
    data = arg.model_dump(mode="json", exclude_none=True)
    lines = _comment(header) + ([""] if header else [])
    lines += _table_lines(arg, data, list(leading_sections))
    return "\n".join(lines).rstrip("\n") + "\n"


@lru_cache()
def find_lab_settings() -> Optional[tuple[Path, Any]]:
    """``(source, settings)`` from ``$FLABCFG``, the nearest ``pyproject.toml``
    with a ``[tool.friction_lab]`` table or the nearest ``flab_config.toml``."""
    if CONFIG_ENV in os.environ:
        p = Path(os.environ[CONFIG_ENV])
        return p, toml.load(p)
    here = Path().resolve()
    for directory in (here, *here.parents):
        pyproject = directory / "pyproject.toml"
        if pyproject.exists():
            table = toml.load(pyproject).get("tool", {}).get("friction_lab")
            if table is not None:
                return pyproject, table
        standalone = directory / CONFIG_FILE
        if standalone.exists():
            return standalone, toml.load(standalone)
    return None


class LogFile(BaseModel):
    """Log file location. A unified path is relative to the directory holding
    the lab settings, so every run of one lab logs to the same file."""

    unified: bool = True
    path: Path

    @model_validator(mode="before")
    @classmethod
    def from_path(cls, values):
        if isinstance(values, (Path, str)):
            return {"path": values}
        return values

    @cached_property
    def resolved_path(self) -> Path:
        if not self.unified:
            return self.path.resolve()
        settings = find_lab_settings()
        root = settings[0].parent if settings is not None else Path("")
        return (root / self.path).resolve()

    @model_validator(mode="after")
    def create_log_dir(self):
        self.resolved_path.parent.mkdir(parents=True, exist_ok=True)
        return self
