"""External investment mechanisms.

Each generation, an outside investor picks a set of cooperators and adds
``theta`` to each of their scores at a cost of ``theta`` per node:

* POP invests in every cooperator while the population cooperation level,
  in percent, is at or below ``p_c``.
* NI invests in cooperators whose degree / max degree is at least ``c_i``.
* LC invests in cooperators whose share of cooperating neighbours is strictly
  below ``n_c`` (or whose count of them is, with ``lc_absolute``).
* NI_AND_LC invests only where both the NI and LC conditions hold.

Nothing is invested once the population is homogeneous.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import PopulationState, cooperating_neighbours, is_homogeneous
from .errors import ParameterError
from .netgen import Graph

NONE = "NONE"
POP = "POP"
NI = "NI"
LC = "LC"
NI_AND_LC = "NI_AND_LC"
KINDS = (NONE, POP, NI, LC, NI_AND_LC)

_REQUIRED = {
    NONE: (),
    POP: ("p_c",),
    NI: ("c_i",),
    LC: ("n_c",),
    NI_AND_LC: ("c_i", "n_c"),
}


@dataclass(frozen=True)
class MechanismSpec:
    kind: str = NONE
    p_c: float | None = None
    c_i: float | None = None
    n_c: float | None = None
    theta: float = 0.0
    lc_absolute: bool = False

    def __post_init__(self) -> None:
        kind = str(self.kind).upper().replace("∧", "_AND_")
        if kind not in KINDS:
            raise ParameterError(f"mechanism kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        required = _REQUIRED[kind]
        for name in ("p_c", "c_i", "n_c"):
            value = getattr(self, name)
            if name in required and value is None:
                raise ParameterError(f"mechanism {kind} requires threshold {name}")
            if name not in required and value is not None:
                raise ParameterError(f"mechanism {kind} does not take threshold {name}")
        if self.p_c is not None and not 0 <= self.p_c <= 100:
            raise ParameterError(f"p_c is a percentage in [0, 100], got {self.p_c}")
        if self.c_i is not None and not 0 <= self.c_i <= 1:
            raise ParameterError(f"c_i must lie in [0, 1], got {self.c_i}")
        if self.n_c is not None and not self.lc_absolute and not 0 <= self.n_c <= 1:
            raise ParameterError(f"n_c is a neighbourhood fraction in [0, 1], got {self.n_c}")
        if self.n_c is not None and self.lc_absolute and self.n_c < 0:
            raise ParameterError(f"absolute n_c must be >= 0, got {self.n_c}")
        if kind == NONE:
            if self.theta != 0:
                raise ParameterError("mechanism NONE takes no theta")
        elif not self.theta > 0:
            raise ParameterError(f"theta must be > 0 for mechanism {kind}, got {self.theta}")

    @property
    def threshold(self) -> float | None:
        """The threshold a sweep varies for this kind (n_c for NI_AND_LC)."""
        return {NONE: None, POP: self.p_c, NI: self.c_i, LC: self.n_c,
                NI_AND_LC: self.n_c}[self.kind]


@dataclass(frozen=True)
class InvestmentDecision:
    invested: frozenset[int]
    generation_cost: float


@dataclass
class CostLedger:
    """Per-generation investment costs of one run."""

    theta: float
    per_generation: list[float] = field(default_factory=list)
    investments: int = 0

    def record(self, invested_count: int) -> float:
        cost = invested_count * self.theta
        self.per_generation.append(cost)
        self.investments += invested_count
        return cost

    @property
    def cumulative(self) -> float:
        return self.investments * self.theta


# -- batched masks -----------------------------------------------------------
# ``coop`` has shape (n,) or (n, runs); ``coop_nb`` is the matching
# cooperating-neighbour count. Every mask is already restricted to cooperators.

def _column(per_node: np.ndarray, like: np.ndarray) -> np.ndarray:
    return per_node if like.ndim == 1 else per_node[:, None]


def pop_mask(coop: np.ndarray, p_c: float) -> np.ndarray:
    n = coop.shape[0]
    pct = 100.0 * coop.sum(axis=0) / n
    return coop & (pct <= p_c)


def ni_mask(g: Graph, coop: np.ndarray, c_i: float) -> np.ndarray:
    influence = g.degree / g.max_degree if g.max_degree else np.zeros(g.node_count)
    return coop & _column(influence >= c_i, coop)


def lc_mask(g: Graph, coop: np.ndarray, coop_nb: np.ndarray, n_c: float,
            absolute: bool = False) -> np.ndarray:
    if absolute:
        return coop & (coop_nb < n_c)
    # An isolated node has no defecting neighbour, so it counts as fully cooperative.
    deg = _column(g.degree, coop)
    share = np.divide(coop_nb, deg, out=np.ones(coop_nb.shape), where=deg > 0)
    return coop & (share < n_c)


def investment_mask(g: Graph, coop: np.ndarray, coop_nb: np.ndarray,
                    spec: MechanismSpec) -> np.ndarray:
    """Cooperators that qualify under ``spec`` (homogeneity not checked here)."""
    kind = spec.kind
    if kind == NONE:
        return np.zeros(coop.shape, dtype=bool)
    if kind == POP:
        return pop_mask(coop, spec.p_c)
    if kind == NI:
        return ni_mask(g, coop, spec.c_i)
    if kind == LC:
        return lc_mask(g, coop, coop_nb, spec.n_c, spec.lc_absolute)
    return ni_mask(g, coop, spec.c_i) & lc_mask(g, coop, coop_nb, spec.n_c, spec.lc_absolute)


# -- set-valued selectors ----------------------------------------------------

def _ids(mask: np.ndarray) -> set[int]:
    return set(np.flatnonzero(mask).tolist())


def _require(spec: MechanismSpec, *kinds: str) -> None:
    if spec.kind not in kinds:
        raise ParameterError(f"selector expects kind in {kinds}, got {spec.kind}")


def select_pop(state: PopulationState, spec: MechanismSpec) -> set[int]:
    _require(spec, POP)
    return _ids(pop_mask(state.strategies, spec.p_c))


def select_ni(g: Graph, state: PopulationState, spec: MechanismSpec) -> set[int]:
    _require(spec, NI, NI_AND_LC)
    return _ids(ni_mask(g, state.strategies, spec.c_i))


def select_lc(g: Graph, state: PopulationState, spec: MechanismSpec) -> set[int]:
    _require(spec, LC, NI_AND_LC)
    coop_nb = cooperating_neighbours(g, state.strategies)
    return _ids(lc_mask(g, state.strategies, coop_nb, spec.n_c, spec.lc_absolute))


def select_combo(g: Graph, state: PopulationState, spec: MechanismSpec) -> set[int]:
    _require(spec, NI_AND_LC)
    return select_ni(g, state, spec) & select_lc(g, state, spec)


def decide(g: Graph, state: PopulationState, spec: MechanismSpec) -> InvestmentDecision:
    if spec.kind == NONE or is_homogeneous(state) is not None:
        return InvestmentDecision(frozenset(), 0.0)
    selector = {
        POP: lambda: select_pop(state, spec),
        NI: lambda: select_ni(g, state, spec),
        LC: lambda: select_lc(g, state, spec),
        NI_AND_LC: lambda: select_combo(g, state, spec),
    }[spec.kind]
    invested = frozenset(selector())
    return InvestmentDecision(invested, len(invested) * spec.theta)


def make_mechanism(kind: str, theta: float, threshold: float | None = None,
                   c_i: float | None = None, lc_absolute: bool = False) -> MechanismSpec:
    """Build a spec from a sweep cell. ``theta == 0`` means no interference.

    For NI_AND_LC, ``threshold`` is n_c and ``c_i`` is held fixed.
    """
    kind = str(kind).upper()
    if kind == NONE or theta == 0:
        return MechanismSpec(NONE)
    if kind == POP:
        return MechanismSpec(POP, p_c=threshold, theta=theta)
    if kind == NI:
        return MechanismSpec(NI, c_i=threshold, theta=theta)
    if kind == LC:
        return MechanismSpec(LC, n_c=threshold, theta=theta, lc_absolute=lc_absolute)
    if kind == NI_AND_LC:
        return MechanismSpec(NI_AND_LC, c_i=c_i, n_c=threshold, theta=theta,
                             lc_absolute=lc_absolute)
    raise ParameterError(f"unknown mechanism kind {kind!r}")
