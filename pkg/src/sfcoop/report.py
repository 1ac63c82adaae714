"""CSV/JSON emitters for run trajectories and sweep grids."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from typing import TextIO

from .sim import RunResult
from .sweep import SweepCell, SweepGrid

GRID_COLUMNS = ("mechanism", "theta", "threshold", "mean_coop", "std_coop",
                "mean_cost", "std_cost", "samples")
TRAJECTORY_COLUMNS = ("generation", "coop_fraction", "generation_cost", "cumulative_cost")


def fmt(x: float) -> str:
    """Shortest text that parses back to the same double."""
    return repr(float(x))


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to a temp file next to ``path`` and rename it into place."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def grid_csv(grid: SweepGrid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GRID_COLUMNS)
    for c in grid.cells:
        w.writerow([c.mechanism, fmt(c.theta), fmt(c.threshold), fmt(c.mean_coop),
                    fmt(c.std_coop), fmt(c.mean_total_cost), fmt(c.std_total_cost),
                    c.samples])
    return buf.getvalue()


def parse_grid_csv(source: TextIO | str) -> SweepGrid:
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    header = next(reader)
    if tuple(header) != GRID_COLUMNS:
        raise ValueError(f"unexpected grid header {header}")
    cells = []
    for row in reader:
        cells.append(SweepCell(
            mechanism=row[0], theta=float(row[1]), threshold=float(row[2]),
            mean_coop=float(row[3]), std_coop=float(row[4]),
            mean_total_cost=float(row[5]), std_total_cost=float(row[6]),
            samples=int(row[7]),
        ))
    return SweepGrid(cells)


def trajectory_csv(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    counts = result.invested_counts.tolist()
    running = 0
    # Row t is the state after generation t; its cost is what was paid to get there.
    for t, coop in enumerate(result.coop_trajectory.tolist()):
        spent = counts[t - 1] if t > 0 else 0
        running += spent
        w.writerow([t, fmt(coop), fmt(spent * result.theta), fmt(running * result.theta)])
    return buf.getvalue()


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
