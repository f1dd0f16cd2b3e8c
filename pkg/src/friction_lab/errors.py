from __future__ import annotations

from typing import ClassVar, Optional


class LabError(Exception):
    """Base class of the errors the `flab` command maps to exit codes."""

    exit_code: ClassVar[int] = 2


class ConfigError(LabError, ValueError):
    exit_code: ClassVar[int] = 1

    def __init__(self, problems: list[str] | str):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__(
            "invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems)
        )


class DomainError(LabError, ValueError):
    """A state left the validity domain, or an argument is outside the domain of a
    constitutive function."""

    exit_code: ClassVar[int] = 2

    def __init__(
        self, message: str, cell: Optional[int] = None, field: Optional[str] = None
    ):
        self.cell = cell
        self.field = field
        if cell is not None:
            message = f"{message} (cell {cell})"
        super().__init__(message)


class StepSizeError(DomainError):
    def __init__(self, dt: float, admissible_dt: float):
        self.dt = dt
        self.admissible_dt = admissible_dt
        super().__init__(
            f"time step {dt:.6e} violates the CFL contract, admissible dt is {admissible_dt:.6e}",
            field="dt",
        )


class ConsistencyError(DomainError):
    pass


class StiffnessError(LabError, RuntimeError):
    exit_code: ClassVar[int] = 2


class AcceptanceError(LabError):
    exit_code: ClassVar[int] = 3
