import base64
import json
import os
import zlib
from pathlib import Path
from string import Template
from typing import Any, Callable, Union

import toml
import yaml
from pydantic import BaseModel, ConfigDict, ValidationError
from pydantic.fields import FieldInfo

from .errors import ConfigError

B64_PREFIX = "b64:"
SECTION_SEPARATOR = "::"

_READERS: dict[str, Callable[[Any], Any]] = {
    ".toml": toml.load,
    ".yaml": yaml.safe_load,
    ".yml": yaml.safe_load,
    ".json": json.load,
}


def _section(data: Any, dotted: str) -> Any:
    for key in filter(None, dotted.split(".")):
        data = data[key]
    return data


def field_doc(info: FieldInfo) -> str:
    parts = []
    if info.description is not None:
        parts.append(info.description)
    if info.annotation is not None:
        parts.append(f"type {getattr(info.annotation, '__name__', info.annotation)}")
    if info.metadata:
        parts.append("constraints " + ", ".join(str(m) for m in info.metadata))
    return " | ".join(parts)


def describe_validation_error(e: ValidationError) -> list[str]:
    problems = []
    for err in e.errors():
        cause = err.get("ctx", {}).get("error")
        if isinstance(cause, ConfigError):
            problems.extend(cause.problems)
            continue
        loc = ".".join(str(i) for i in err["loc"]) or "<root>"
        problems.append(f"{loc}: {err['msg']}")
    return problems


class ArgBase(BaseModel):
    """
    Base class of the configuration files read by `flab`.
    ```python
    class Args(ArgBase):
        ...
    ```
    """

    model_config = ConfigDict(ser_json_inf_nan="constants", extra="forbid")

    @classmethod
    def __pydantic_init_subclass__(cls, **kwargs):
        lines = [f"   {name}: {field_doc(info)}" for name, info in cls.model_fields.items()]
        if lines:
            cls.__doc__ = (cls.__doc__ or "") + "\n\nparameters:\n" + "\n".join(lines)

    def to_base64(self) -> str:
        return base64.b64encode(zlib.compress(self.model_dump_json().encode(), 9)).decode()

    @classmethod
    def from_base64(cls, s: str, substitute: bool = True):
        """Inverse of `to_base64`; ``$VAR`` references are filled from the
        environment unless ``substitute`` is false."""
        text = zlib.decompress(base64.b64decode(s.encode())).decode()
        if substitute:
            text = Template(text).safe_substitute(os.environ)
        return cls.model_validate_json(text)

    @classmethod
    def from_config(cls, path: Union[str, Path]):
        """Read ``file.toml``, ``file.yaml`` or ``file.json``; ``file.toml::a.b``
        reads the nested table ``a.b``."""
        path, _, section = str(path).partition(SECTION_SEPARATOR)
        reader = _READERS.get(Path(path).suffix)
        if reader is None:
            raise ValueError(f"Unsupported config file format: {Path(path).suffix}")
        with open(path, encoding="utf-8") as fp:
            return cls.model_validate(_section(reader(fp), section))

    @classmethod
    def load(cls, source: Union[str, Path]):
        """Load from a config path or a ``b64:`` string, turning every failure
        into one `ConfigError`."""
        source = str(source)
        try:
            if source.startswith(B64_PREFIX):
                return cls.from_base64(source[len(B64_PREFIX) :])
            return cls.from_config(source)
        except ValidationError as e:
            raise ConfigError(describe_validation_error(e)) from e
        except (OSError, KeyError, ValueError, zlib.error, yaml.YAMLError) as e:
            raise ConfigError(f"cannot read {source}: {e}") from e

    def reproduce(self, command: str) -> str:
        """Shell line that reruns ``command`` with exactly this configuration."""
        return f"flab {command} --config {B64_PREFIX}{self.to_base64()}"
