"""Parameter sweeps over (theta x threshold) grids with a paired seed design.

Seed splitting
--------------
Every random stream is a ``numpy.random.SeedSequence`` whose entropy is the
sweep's ``master_seed`` and whose ``spawn_key`` names the consumer:

* graph ``g``:                       ``spawn_key = (0, g)``
* initial strategies of run ``r``
  on graph ``g``:                    ``spawn_key = (1, g, r)``

Grid cells draw no randomness of their own, so every cell sees the same
graphs and the same initial populations, and adding grid points never
changes existing cells.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .engine import PayoffParams
from .errors import ContractError, ParameterError
from .mechanisms import KINDS, NI_AND_LC, MechanismSpec, make_mechanism
from .netgen import Graph, GenParams, generate
from .sim import RunResult, _strategy_draw, run_batch

GRAPH_STREAM = 0
STRATEGY_STREAM = 1

DEFAULT_THETAS = (0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0)
UNIT_THRESHOLDS = tuple(round(0.1 * k, 1) for k in range(11))
PERCENT_THRESHOLDS = tuple(float(10 * k) for k in range(1, 11))


def graph_seed(master_seed: int, graph_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(GRAPH_STREAM, graph_index))


def strategy_seed(master_seed: int, graph_index: int, run_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed,
                                  spawn_key=(STRATEGY_STREAM, graph_index, run_index))


def derived_int_seed(seq: np.random.SeedSequence) -> int:
    """A 64-bit integer standing in for ``seq`` where an int seed is required."""
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class SweepSpec:
    gen_params: GenParams = field(default_factory=GenParams)
    mechanism_kind: str = "POP"
    theta_grid: tuple[float, ...] = DEFAULT_THETAS
    threshold_grid: tuple[float, ...] = PERCENT_THRESHOLDS
    payoff: PayoffParams = field(default_factory=PayoffParams)
    graph_count: int = 10
    realisations_per_graph: int = 30
    master_seed: int = 0
    generations: int = 75
    tail_window: int = 25
    fixed_c_i: float = 0.05  # only used by NI_AND_LC, whose threshold grid is n_c
    lc_absolute: bool = False

    def __post_init__(self) -> None:
        kind = str(self.mechanism_kind).upper()
        if kind not in KINDS:
            raise ParameterError(f"mechanism kind must be one of {KINDS}, got {self.mechanism_kind!r}")
        object.__setattr__(self, "mechanism_kind", kind)
        object.__setattr__(self, "theta_grid", tuple(float(t) for t in self.theta_grid))
        object.__setattr__(self, "threshold_grid", tuple(float(t) for t in self.threshold_grid))
        if not self.theta_grid or not self.threshold_grid:
            raise ParameterError("theta and threshold grids must be non-empty")
        if self.graph_count < 1 or self.realisations_per_graph < 1:
            raise ParameterError("graph_count and realisations_per_graph must be >= 1")
        if self.generations < 1 or not 1 <= self.tail_window <= self.generations:
            raise ParameterError("need generations >= 1 and 1 <= tail_window <= generations")

    def cells(self) -> list[tuple[float, float]]:
        return [(t, h) for t in self.theta_grid for h in self.threshold_grid]

    def mechanism(self, theta: float, threshold: float) -> MechanismSpec:
        try:
            return make_mechanism(self.mechanism_kind, theta, threshold,
                                  c_i=self.fixed_c_i if self.mechanism_kind == NI_AND_LC else None,
                                  lc_absolute=self.lc_absolute)
        except ParameterError as exc:
            raise ParameterError(f"cell theta={theta}, threshold={threshold}: {exc}") from None

    def graph_params(self, graph_index: int) -> GenParams:
        seed = derived_int_seed(graph_seed(self.master_seed, graph_index))
        return replace(self.gen_params, seed=seed)


@dataclass(frozen=True)
class CellStats:
    mean_coop: float
    std_coop: float
    mean_total_cost: float
    std_total_cost: float
    samples: int


@dataclass(frozen=True)
class SweepCell:
    mechanism: str
    theta: float
    threshold: float
    mean_coop: float
    std_coop: float
    mean_total_cost: float
    std_total_cost: float
    samples: int
    per_graph_mean_coop: tuple[float, ...] = ()
    per_graph_mean_cost: tuple[float, ...] = ()

    @property
    def stats(self) -> CellStats:
        return CellStats(self.mean_coop, self.std_coop, self.mean_total_cost,
                         self.std_total_cost, self.samples)


@dataclass
class SweepGrid:
    cells: list[SweepCell]

    def cell(self, theta: float, threshold: float) -> SweepCell:
        for c in self.cells:
            if c.theta == theta and c.threshold == threshold:
                return c
        raise KeyError((theta, threshold))


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    # fsum is exact, so the result does not depend on summation order.
    k = len(values)
    mean = math.fsum(values) / k
    if k == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (k - 1)
    return mean, math.sqrt(var)


def aggregate(results: Sequence[RunResult]) -> CellStats:
    """Mean and sample standard deviation of tail cooperation and total cost."""
    if not results:
        raise ContractError("cannot aggregate an empty result list")
    mc, sc = _mean_std([r.tail_coop for r in results])
    mk, sk = _mean_std([r.total_cost for r in results])
    return CellStats(mc, sc, mk, sk, len(results))


def initial_states(spec: SweepSpec, graph_index: int, n: int) -> np.ndarray:
    return np.array([_strategy_draw(n, strategy_seed(spec.master_seed, graph_index, r))
                     for r in range(spec.realisations_per_graph)])


def cell_results(spec: SweepSpec, g: Graph, initial: np.ndarray, theta: float,
                 threshold: float) -> list[RunResult]:
    return run_batch(g, initial, spec.payoff, spec.mechanism(theta, threshold),
                     spec.generations, spec.tail_window)


def _graph_task(spec: SweepSpec, graph_index: int) -> tuple[np.ndarray, np.ndarray]:
    """Tail cooperation and total cost, shape (cells, runs), for one graph."""
    g = generate(spec.graph_params(graph_index))
    init = initial_states(spec, graph_index, g.node_count)
    cells = spec.cells()
    coop = np.empty((len(cells), spec.realisations_per_graph))
    cost = np.empty_like(coop)
    for k, (theta, threshold) in enumerate(cells):
        results = cell_results(spec, g, init, theta, threshold)
        coop[k] = [r.tail_coop for r in results]
        cost[k] = [r.total_cost for r in results]
    return coop, cost


def run_sweep_raw(spec: SweepSpec, workers: int | None = 1) -> tuple[np.ndarray, np.ndarray]:
    """Per-run outcomes, each of shape (cells, graphs, runs)."""
    for theta, threshold in spec.cells():
        spec.mechanism(theta, threshold)  # fail before any work on a bad cell
    if workers is None:
        workers = os.cpu_count() or 1
    indices = range(spec.graph_count)
    if workers <= 1 or spec.graph_count == 1:
        parts = [_graph_task(spec, g) for g in indices]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, spec.graph_count)) as pool:
            parts = list(pool.map(_graph_task, [spec] * spec.graph_count, indices))
    coop = np.stack([p[0] for p in parts], axis=1)
    cost = np.stack([p[1] for p in parts], axis=1)
    return coop, cost


def run_sweep(spec: SweepSpec, workers: int | None = 1) -> SweepGrid:
    """Run every grid cell on the same graphs and initial populations.

    Results are folded in (graph, run) order, so the grid is identical for
    any number of workers.
    """
    coop, cost = run_sweep_raw(spec, workers)
    cells = []
    for k, (theta, threshold) in enumerate(spec.cells()):
        mc, sc = _mean_std(coop[k].ravel().tolist())
        mk, sk = _mean_std(cost[k].ravel().tolist())
        cells.append(SweepCell(
            mechanism=spec.mechanism(theta, threshold).kind,
            theta=theta,
            threshold=threshold,
            mean_coop=mc,
            std_coop=sc,
            mean_total_cost=mk,
            std_total_cost=sk,
            samples=coop[k].size,
            per_graph_mean_coop=tuple(math.fsum(row) / len(row) for row in coop[k].tolist()),
            per_graph_mean_cost=tuple(math.fsum(row) / len(row) for row in cost[k].tolist()),
        ))
    return SweepGrid(cells)


# Default grids for each mechanism (run at n = 5000, z = 4, b = 1.8).
PRESETS: dict[str, dict] = {
    "pop": dict(mechanism_kind="POP", theta_grid=DEFAULT_THETAS,
                threshold_grid=PERCENT_THRESHOLDS),
    "ni": dict(mechanism_kind="NI", theta_grid=DEFAULT_THETAS,
               threshold_grid=UNIT_THRESHOLDS),
    "lc": dict(mechanism_kind="LC", theta_grid=DEFAULT_THETAS,
               threshold_grid=UNIT_THRESHOLDS),
    "ni_and_lc": dict(mechanism_kind="NI_AND_LC", theta_grid=DEFAULT_THETAS,
                      threshold_grid=UNIT_THRESHOLDS, fixed_c_i=0.05),
}


def preset(name: str, model: str = "BA", **overrides) -> SweepSpec:
    try:
        base = dict(PRESETS[name])
    except KeyError:
        raise ParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    base.update(overrides)
    base.setdefault("gen_params", GenParams(model, 5000, 2))
    return SweepSpec(**base)


def load_graphs(spec: SweepSpec) -> list[Graph]:
    return [generate(spec.graph_params(g)) for g in range(spec.graph_count)]
