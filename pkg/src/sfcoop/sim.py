"""Full realisations: score, invest, imitate, repeated for a fixed horizon."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .engine import (PayoffParams, PopulationState, Strategy, cooperating_neighbours,
                     imitate, payoff_scores)
from .errors import ContractError, ParameterError
from .mechanisms import NONE, MechanismSpec, investment_mask
from .netgen import Graph, make_rng


@dataclass(frozen=True)
class SimConfig:
    payoff: PayoffParams = field(default_factory=PayoffParams)
    mechanism: MechanismSpec = field(default_factory=MechanismSpec)
    generations: int = 75
    tail_window: int = 25
    strategy_seed: int = 0

    def __post_init__(self) -> None:
        if self.generations < 1:
            raise ParameterError(f"generations must be >= 1, got {self.generations}")
        if not 1 <= self.tail_window <= self.generations:
            raise ParameterError(
                f"tail_window must lie in [1, generations], got {self.tail_window}")


@dataclass
class RunResult:
    """Outcome of one realisation.

    ``coop_trajectory[0]`` is the initial cooperation fraction and
    ``coop_trajectory[t]`` the fraction after generation ``t``.
    ``invested_counts[t]`` and ``per_generation_cost[t]`` belong to the
    generation that starts from state ``t``. ``absorbed_at`` is
    ``(t, strategy)`` for the first homogeneous state, if any.
    """

    coop_trajectory: np.ndarray
    per_generation_cost: np.ndarray
    invested_counts: np.ndarray
    tail_coop: float
    total_cost: float
    absorbed_at: tuple[int, Strategy] | None
    theta: float = 0.0

    @property
    def investments(self) -> int:
        return int(self.invested_counts.sum())

    def summary(self) -> dict:
        return {
            "tail_coop": self.tail_coop,
            "total_cost": self.total_cost,
            "investments": self.investments,
            "absorbed_at": (None if self.absorbed_at is None else
                            {"generation": self.absorbed_at[0],
                             "strategy": self.absorbed_at[1].value}),
        }


def _strategy_draw(n: int, seed: int | np.random.SeedSequence) -> np.ndarray:
    return make_rng(seed).random(n) < 0.5


def init_strategies(n: int, seed: int | np.random.SeedSequence) -> PopulationState:
    """Each node cooperates independently with probability 1/2."""
    if n < 1:
        raise ParameterError(f"population size must be >= 1, got {n}")
    return PopulationState(_strategy_draw(n, seed))


def tail_mean(trajectory: np.ndarray, window: int) -> float:
    return math.fsum(trajectory[-window:].tolist()) / window


def run_batch(g: Graph, initial: np.ndarray, payoff: PayoffParams,
              mechanism: MechanismSpec, generations: int = 75,
              tail_window: int = 25) -> list[RunResult]:
    """Run independent realisations that share ``g``, one per row of ``initial``
    (shape ``(runs, n)``).

    Rows are advanced together but never interact, so each result equals
    the one obtained by running that row alone.
    """
    rows = np.array(initial, dtype=bool, ndmin=2)
    runs, n = rows.shape
    if n != g.node_count:
        raise ContractError(f"initial states have {n} nodes, graph has {g.node_count}")
    theta = mechanism.theta if mechanism.kind != NONE else 0.0

    # Node-major layout: column r is realisation r.
    coop = np.ascontiguousarray(rows.T)
    xc = coop.sum(axis=0)
    traj = np.empty((runs, generations + 1))
    traj[:, 0] = xc / n
    counts = np.zeros((runs, generations), dtype=np.int64)
    absorbed = np.full(runs, -1, dtype=np.int64)
    homogeneous = (xc == 0) | (xc == n)
    absorbed[homogeneous] = 0
    active = np.flatnonzero(~homogeneous)

    for t in range(generations):
        traj[:, t + 1] = traj[:, t]
        if active.size == 0:
            continue
        c = coop[:, active]
        coop_nb = cooperating_neighbours(g, c)
        scores = payoff_scores(c, coop_nb, payoff.b)
        if theta:
            mask = investment_mask(g, c, coop_nb, mechanism)
            counts[active, t] = mask.sum(axis=0)
            scores = np.where(mask, scores + theta, scores)
        c = imitate(g, c, scores)
        coop[:, active] = c
        x = c.sum(axis=0)
        traj[active, t + 1] = x / n
        done = (x == 0) | (x == n)
        absorbed[active[done]] = t + 1
        active = active[~done]

    results = []
    for r in range(runs):
        absorbed_at = None
        if absorbed[r] >= 0:
            t0 = int(absorbed[r])
            absorbed_at = (t0, Strategy.C if traj[r, t0] == 1.0 else Strategy.D)
        investments = int(counts[r].sum())
        results.append(RunResult(
            coop_trajectory=traj[r].copy(),
            per_generation_cost=counts[r] * theta,
            invested_counts=counts[r].copy(),
            tail_coop=tail_mean(traj[r], tail_window),
            total_cost=investments * theta,
            absorbed_at=absorbed_at,
            theta=theta,
        ))
    return results


def run(g: Graph, cfg: SimConfig, initial: PopulationState | None = None) -> RunResult:
    """One realisation; the initial state is drawn from ``cfg.strategy_seed`` unless given."""
    if initial is None:
        initial = init_strategies(g.node_count, cfg.strategy_seed)
    elif len(initial) != g.node_count:
        raise ContractError(
            f"initial state has {len(initial)} nodes, graph has {g.node_count}")
    return run_batch(g, initial.strategies, cfg.payoff, cfg.mechanism,
                     cfg.generations, cfg.tail_window)[0]
