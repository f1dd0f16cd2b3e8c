"""Executors run the members of a sweep; results keep the submission order."""

import pydoc
from concurrent.futures import ProcessPoolExecutor
from typing import Annotated, Callable, Iterable, TypeVar

from loguru import logger as logger
from pydantic import BaseModel, Field

T = TypeVar("T")
R = TypeVar("R")


class Executor(BaseModel):
    workers: Annotated[int, Field(ge=1, description="number of workers")] = 1

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]: ...

    @staticmethod
    def resolve_subclass(name: str) -> type["Executor"]:
        if name == "serial":
            return SerialExecutor
        if name == "process":
            return ProcessExecutor
        s = pydoc.locate(name)
        if isinstance(s, type) and issubclass(s, Executor):
            return s
        raise ValueError(f"Unsupported executor: {name}")


class SerialExecutor(Executor):
    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        return [fn(item) for item in items]


class ProcessExecutor(Executor):
    """`fn` and the items must be picklable."""

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        items = list(items)
        logger.info(f"running {len(items)} members on {self.workers} processes")
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, items))
