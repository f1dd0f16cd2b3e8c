"""CSV and gnuplot writers.

Floats are written with ``repr`` so a file is a byte-exact record of the run.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
from loguru import logger

from .diagnostics import EntropyProduction, RelEntropyReport
from .state import Grid1D, StateI, StateII


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def write_csv(path: Path, fieldnames: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    logger.info(f"wrote {path}")
    return path


def read_csv(path: Union[str, Path]) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fp:
        reader = csv.reader(fp)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    return header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def snapshot_columns(state: Union[StateII, StateI]) -> list[str]:
    n = state.n
    rho = [f"rho_{i + 1}" for i in range(n)]
    if isinstance(state, StateI):
        return ["t", "x", *rho, "v", "theta", *(f"u_{i + 1}" for i in range(n))]
    return ["t", "x", *rho, *(f"v_{i + 1}" for i in range(n)), "theta"]


def snapshot_rows(state: Union[StateII, StateI], grid: Grid1D, t: float) -> list[list]:
    if isinstance(state, StateI):
        fields = [*state.rho, state.v, state.theta, *state.u]
    else:
        fields = [*state.rho, *state.v, state.theta]
    x = grid.x
    return [[t, x[k], *(f[k] for f in fields)] for k in range(grid.ncells)]


def write_snapshots(
    path: Path, snapshots: Sequence[tuple[float, Union[StateII, StateI]]], grid: Grid1D
) -> Path:
    """All snapshots of one run in a single long-format file."""
    columns = snapshot_columns(snapshots[0][1])
    rows: list[list] = []
    for t, state in snapshots:
        rows.extend(snapshot_rows(state, grid, t))
    return write_csv(path, columns, rows)


PRODUCTION_COLUMNS = (
    "t",
    "total_entropy",
    "entropy_change",
    "conduction",
    "friction",
    "supply",
    "allowance",
)


def write_production(
    path: Path,
    series: Sequence[tuple[float, EntropyProduction, float, float]],
) -> Path:
    """``series`` holds ``(t, production, entropy_change, allowance)`` per step."""
    rows = [
        (t, p.total_entropy, change, p.conduction, p.friction, p.supply, allowance)
        for t, p, change, allowance in series
    ]
    return write_csv(path, PRODUCTION_COLUMNS, rows)


def write_relative_entropy(path: Path, reports: Sequence[RelEntropyReport]) -> Path:
    return write_csv(path, RelEntropyReport.columns, [r.row() for r in reports])


def to_gnuplot(csv_path: Union[str, Path], output: Union[str, Path, None] = None) -> Path:
    """Convert a CSV file to a whitespace separated ``.dat`` file.

    Snapshot files get a blank line between times so ``splot``/``index``
    see one block per snapshot.
    """
    csv_path = Path(csv_path)
    output = Path(output) if output is not None else csv_path.with_suffix(".dat")
    header, data = read_csv(csv_path)
    blocks = "x" in header and header[0] == "t"
    lines = ["# " + " ".join(header)]
    previous = None
    for row in data:
        if blocks and previous is not None and row[0] != previous:
            lines.append("")
        previous = row[0]
        lines.append(" ".join(repr(float(v)) for v in row))
    output.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"wrote {output}")
    return output
