"""One generation of the networked Prisoner's Dilemma.

Strategies are boolean arrays (``True`` = cooperator). The batched helpers
(``cooperating_neighbours``, ``payoff_scores``, ``imitate``) accept either a
single population of shape ``(n,)`` or ``(n, runs)`` columns of independent
populations that share one graph; columns never interact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numba
import numpy as np

from .errors import ContractError, ParameterError
from .netgen import Graph


class Strategy(Enum):
    C = "C"
    D = "D"


@dataclass(frozen=True)
class PayoffParams:
    """Weak PD: T = b, R = 1, P = S = 0."""

    b: float = 1.8

    def __post_init__(self) -> None:
        if not 1.0 < self.b <= 2.0:
            raise ParameterError(f"temptation b must satisfy 1 < b <= 2, got {self.b}")


@dataclass(frozen=True, eq=False)
class PopulationState:
    strategies: np.ndarray
    cooperator_count: int = field(init=False)

    def __post_init__(self) -> None:
        s = np.array(self.strategies, dtype=bool)
        if s.ndim != 1:
            raise ContractError("strategies must be one-dimensional")
        s.setflags(write=False)
        object.__setattr__(self, "strategies", s)
        object.__setattr__(self, "cooperator_count", int(s.sum()))

    @classmethod
    def from_string(cls, text: str) -> "PopulationState":
        """``"CCD"`` -> nodes 0 and 1 cooperate, node 2 defects."""
        bad = set(text) - {"C", "D"}
        if bad:
            raise ParameterError(f"unknown strategy symbols {sorted(bad)}")
        return cls(np.array([c == "C" for c in text], dtype=bool))

    @classmethod
    def uniform(cls, n: int, strategy: Strategy) -> "PopulationState":
        return cls(np.full(n, strategy is Strategy.C))

    def __len__(self) -> int:
        return len(self.strategies)

    def __getitem__(self, i: int) -> Strategy:
        return Strategy.C if self.strategies[i] else Strategy.D

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PopulationState):
            return NotImplemented
        return np.array_equal(self.strategies, other.strategies)

    def __str__(self) -> str:
        return "".join("C" if s else "D" for s in self.strategies)

    @property
    def cooperation(self) -> float:
        return self.cooperator_count / len(self.strategies)


def pairwise_payoff(s1: Strategy, s2: Strategy, p: PayoffParams) -> tuple[float, float]:
    if s1 is Strategy.C:
        return (1.0, 1.0) if s2 is Strategy.C else (0.0, p.b)
    return (p.b, 0.0) if s2 is Strategy.C else (0.0, 0.0)


def cooperating_neighbours(g: Graph, coop: np.ndarray) -> np.ndarray:
    """Number of cooperating neighbours of every node (integer-valued floats)."""
    return g.sparse @ np.asarray(coop, dtype=np.float64)


def payoff_scores(coop: np.ndarray, coop_neighbours: np.ndarray, b: float) -> np.ndarray:
    # A cooperator earns R = 1 per cooperating neighbour, a defector T = b.
    return np.where(coop, coop_neighbours, b * coop_neighbours)


def _check_size(g: Graph, state: PopulationState) -> None:
    if len(state) != g.node_count:
        raise ContractError(
            f"population has {len(state)} nodes but graph has {g.node_count}")


def accumulate_scores(g: Graph, state: PopulationState, p: PayoffParams) -> np.ndarray:
    _check_size(g, state)
    return payoff_scores(state.strategies,
                         cooperating_neighbours(g, state.strategies), p.b)


def apply_investments(scores: np.ndarray, invested: Iterable[int], theta: float) -> np.ndarray:
    if not theta > 0:
        raise ParameterError(f"investment theta must be > 0, got {theta}")
    out = np.array(scores, dtype=np.float64)
    idx = np.fromiter(invested, dtype=np.int64)
    out[idx] += theta
    return out


@numba.njit(cache=True, nogil=True)
def _imitate_kernel(indptr, indices, coop, scores, include_self, out):
    n, runs = coop.shape
    best = np.empty(runs)
    src = np.empty(runs, dtype=np.int64)
    for i in range(n):
        best[:] = -np.inf
        src[:] = -1
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            for r in range(runs):
                if scores[j, r] > best[r]:  # strict: the smallest tied id wins
                    best[r] = scores[j, r]
                    src[r] = j
        for r in range(runs):
            if src[r] < 0 or (include_self and scores[i, r] >= best[r]):
                out[i, r] = coop[i, r]
            else:
                out[i, r] = coop[src[r], r]


def imitate(g: Graph, coop: np.ndarray, scores: np.ndarray,
            include_self: bool = True) -> np.ndarray:
    """Synchronous imitate-the-best step.

    Each node takes the strategy of the top scorer among itself and its
    neighbours. Ties: the node keeps its own strategy if it attains the
    maximum, otherwise it copies the tied neighbour with the smallest id.
    With ``include_self=False`` the node always copies its best neighbour.
    Isolated nodes keep their strategy.
    """
    coop = np.asarray(coop, dtype=np.bool_)
    scores = np.asarray(scores, dtype=np.float64)
    if coop.shape != scores.shape or coop.shape[0] != g.node_count:
        raise ContractError("strategy, score and graph sizes disagree")
    c2 = np.ascontiguousarray(coop.reshape(g.node_count, -1))
    s2 = np.ascontiguousarray(scores.reshape(g.node_count, -1))
    out = np.empty_like(c2)
    _imitate_kernel(g.indptr, g.indices, c2, s2, include_self, out)
    return out.reshape(coop.shape)


def imitation_update(g: Graph, state: PopulationState, scores: np.ndarray) -> PopulationState:
    _check_size(g, state)
    return PopulationState(imitate(g, state.strategies, scores))


def is_homogeneous(state: PopulationState) -> Strategy | None:
    if state.cooperator_count == len(state):
        return Strategy.C
    if state.cooperator_count == 0:
        return Strategy.D
    return None
