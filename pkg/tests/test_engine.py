import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfcoop.engine import (PayoffParams, PopulationState, Strategy, accumulate_scores,
                           apply_investments, imitate, imitation_update, is_homogeneous,
                           pairwise_payoff)
from sfcoop.errors import ContractError, ParameterError
from sfcoop.netgen import Graph

import oracles

C, D = Strategy.C, Strategy.D
P = PayoffParams(1.8)


@pytest.mark.parametrize("s1, s2, expected", [
    (C, C, (1, 1)),
    (C, D, (0, 1.8)),
    (D, C, (1.8, 0)),
    (D, D, (0, 0)),
])
def test_pairwise_payoff(s1, s2, expected):
    assert pairwise_payoff(s1, s2, P) == expected


@pytest.mark.parametrize("b", [1.0, 0.5, 2.5])
def test_payoff_params_range(b):
    with pytest.raises(ParameterError):
        PayoffParams(b)


def test_k3_all_cooperate(k3):
    s = accumulate_scores(k3, PopulationState.from_string("CCC"), P)
    assert s.tolist() == [2, 2, 2]


def test_k3_one_defector(k3):
    s = accumulate_scores(k3, PopulationState.from_string("CCD"), P)
    # brute force over the three edges
    assert s.tolist() == [1.0, 1.0, 3.6]


def test_star_defecting_hub(star5):
    s = accumulate_scores(star5, PopulationState.from_string("DCCCC"), P)
    assert s[0] == pytest.approx(7.2, abs=0)
    assert s[1:].tolist() == [0, 0, 0, 0]


def test_score_size_mismatch(k3):
    with pytest.raises(ContractError):
        accumulate_scores(k3, PopulationState.from_string("CC"), P)


def test_apply_investments():
    scores = np.array([1.0, 2.0, 3.6])
    assert apply_investments(scores, set(), 5).tolist() == scores.tolist()
    assert apply_investments(scores, {0}, 5).tolist() == [6.0, 2.0, 3.6]
    assert scores.tolist() == [1.0, 2.0, 3.6]  # input untouched
    with pytest.raises(ParameterError):
        apply_investments(scores, {0}, 0)


def test_invest_all_cooperators(k3):
    state = PopulationState.from_string("CCD")
    base = accumulate_scores(k3, state, P)
    coop = set(np.flatnonzero(state.strategies).tolist())
    out = apply_investments(base, coop, 2.5)
    assert out.tolist() == [3.5, 3.5, 3.6]


def test_k3_defector_takes_over(k3):
    state = PopulationState.from_string("CCD")
    nxt = imitation_update(k3, state, accumulate_scores(k3, state, P))
    assert str(nxt) == "DDD"
    assert nxt.cooperator_count == 0


def test_k3_invested_cooperators_win(k3):
    state = PopulationState.from_string("CCD")
    scores = apply_investments(accumulate_scores(k3, state, P), {0, 1}, 5)
    assert scores.tolist() == [6, 6, 3.6]
    nxt = imitation_update(k3, state, scores)
    assert str(nxt) == "CCC"
    assert nxt.cooperator_count == 3


def test_tie_prefers_self_then_lowest_id():
    g = Graph.from_edges(4, [(0, 3), (1, 3), (2, 3)])
    coop = np.array([False, True, False, True])
    # node 3 ties with nodes 1 and 2 but beats itself -> copies node 1 (lowest tied id)
    scores = np.array([1.0, 5.0, 5.0, 2.0])
    assert imitate(g, coop, scores).tolist() == [True, True, False, True]
    # node 3 tied with the maximum -> keeps its own strategy
    coop2 = np.array([False, False, False, True])
    scores2 = np.array([1.0, 5.0, 5.0, 5.0])
    assert imitate(g, coop2, scores2)[3]


def test_exclude_self_policy(path3):
    coop = np.array([True, False, True])
    scores = np.array([0.0, 1.0, 5.0])
    assert imitate(path3, coop, scores).tolist() == [False, True, True]
    assert imitate(path3, coop, scores, include_self=False).tolist() == [False, True, False]


def test_isolated_node_keeps_strategy():
    g = Graph.from_edges(3, [(0, 1)])
    out = imitate(g, np.array([True, False, False]), np.array([0.0, 9.0, 100.0]))
    assert out.tolist() == [False, False, False]


@pytest.mark.parametrize("text, expected", [("CCCC", C), ("DDD", D), ("CDC", None)])
def test_is_homogeneous(text, expected):
    assert is_homogeneous(PopulationState.from_string(text)) is expected


def test_batched_columns_are_independent():
    rng = random.Random(3)
    adj = oracles.random_connected_graph(rng, 10)
    g = Graph.from_edges(10, oracles.edges_of(adj))
    coop = np.array([[rng.random() < 0.5 for _ in range(4)] for _ in range(10)])
    scores = np.array([[rng.choice([0, 1, 1.8, 2, 3.6]) for _ in range(4)] for _ in range(10)])
    batch = imitate(g, coop, scores)
    for r in range(4):
        assert batch[:, r].tolist() == imitate(g, coop[:, r], scores[:, r]).tolist()


# -- property tests ------------------------------------------------------------

@st.composite
def graphs_and_states(draw, max_nodes=12):
    n = draw(st.integers(1, max_nodes))
    seed = draw(st.integers(0, 2**32 - 1))
    adj = oracles.random_connected_graph(random.Random(seed), n)
    coop = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    return adj, coop


def _graph(adj):
    return Graph.from_edges(len(adj), oracles.edges_of(adj))


@given(graphs_and_states(), st.sampled_from([1.8, 1.5, 1.25, 2.0]))
@settings(max_examples=300, deadline=None)
def test_edge_contributions_are_payoff_pairs(data, b):
    adj, coop = data
    for i, j in oracles.edges_of(adj):
        pi, pj = pairwise_payoff(C if coop[i] else D, C if coop[j] else D, PayoffParams(b))
        assert (pi, pj) in {(1, 1), (0, b), (b, 0), (0, 0)}


@given(graphs_and_states(), st.sampled_from([1.8, 1.5, 1.25, 2.0]))
@settings(max_examples=300, deadline=None)
def test_scores_and_update_match_bruteforce(data, b):
    adj, coop = data
    g = _graph(adj)
    state = PopulationState(np.array(coop, dtype=bool))
    scores = accumulate_scores(g, state, PayoffParams(b))
    ref = oracles.scores(adj, coop, b)
    assert scores.tolist() == [float(x) for x in ref]
    assert imitation_update(g, state, scores).strategies.tolist() == oracles.step(adj, coop, ref)


@given(graphs_and_states(), st.sampled_from([C, D]), st.floats(0.25, 50))
@settings(max_examples=200, deadline=None)
def test_homogeneous_states_are_absorbing(data, strategy, theta):
    adj, _ = data
    g = _graph(adj)
    state = PopulationState.uniform(len(adj), strategy)
    scores = accumulate_scores(g, state, P)
    assert imitation_update(g, state, scores) == state
    invested = set(range(0, len(adj), 2)) if strategy is C else set()
    if invested:
        scores = apply_investments(scores, invested, theta)
    assert imitation_update(g, state, scores) == state


@given(graphs_and_states(), st.sampled_from([-3.0, 0.5, 7.0, 1024.0]))
@settings(max_examples=200, deadline=None)
def test_constant_shift_does_not_change_update(data, shift):
    adj, coop = data
    g = _graph(adj)
    state = PopulationState(np.array(coop, dtype=bool))
    scores = accumulate_scores(g, state, P)
    assert imitation_update(g, state, scores + shift) == imitation_update(g, state, scores)


@given(graphs_and_states(), st.randoms(use_true_random=False))
@settings(max_examples=200, deadline=None)
def test_node_relabelling_commutes_with_update(data, rnd):
    """Relabel nodes, update, relabel back: same result when scores are tie-free."""
    adj, coop = data
    n = len(adj)
    perm = list(range(n))
    rnd.shuffle(perm)
    # distinct scores so that the id-based tie-break never fires
    ranks = list(range(n))
    rnd.shuffle(ranks)
    scores = np.array(ranks, dtype=float)
    base = imitate(_graph(adj), np.array(coop), scores)
    inv = [0] * n
    for old, new in enumerate(perm):
        inv[new] = old
    relabelled = [sorted(perm[j] for j in adj[inv[k]]) for k in range(n)]
    out = imitate(_graph(relabelled), np.array([coop[inv[k]] for k in range(n)]),
                  scores[inv])
    assert [bool(out[perm[i]]) for i in range(n)] == base.tolist()


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_update_is_synchronous(seed):
    """Sequentially applying per-node rules on the old state equals the vector update."""
    rng = random.Random(seed)
    n = rng.randint(2, 12)
    adj = oracles.random_connected_graph(rng, n)
    coop = [rng.random() < 0.5 for _ in range(n)]
    g = _graph(adj)
    state = PopulationState(np.array(coop, dtype=bool))
    scores = accumulate_scores(g, state, P)
    order = list(range(n))
    rng.shuffle(order)
    frozen = list(coop)
    manual = [None] * n
    for i in order:
        best = max([scores[i]] + [scores[j] for j in adj[i]])
        if scores[i] == best:
            manual[i] = frozen[i]
        else:
            manual[i] = frozen[min(j for j in adj[i] if scores[j] == best)]
    assert imitation_update(g, state, scores).strategies.tolist() == manual


def test_exact_tie_between_integer_and_b_multiple():
    # D with 5 C neighbours scores 5 * 9/5 = 9, exactly tying a C with 9 C neighbours.
    assert Fraction(9, 5) * 5 == 9
    assert 1.8 * 5 == 9.0
