import numpy as np
import pytest

from sfcoop.errors import ContractError, ParameterError
from sfcoop.mechanisms import MechanismSpec
from sfcoop.netgen import GenParams, generate
from sfcoop.sim import RunResult, SimConfig, init_strategies, run, run_batch
from sfcoop.sweep import (SweepSpec, aggregate, cell_results, derived_int_seed, graph_seed,
                          initial_states, load_graphs, preset, run_sweep, run_sweep_raw,
                          strategy_seed)


def small_spec(**kw):
    base = dict(gen_params=GenParams("DMS", n=150, m=2), mechanism_kind="POP",
                theta_grid=(0.5, 5.0), threshold_grid=(50.0, 100.0), graph_count=3,
                realisations_per_graph=4, master_seed=12, generations=20, tail_window=5)
    base.update(kw)
    return SweepSpec(**base)


def fake(tail, cost=0.0):
    return RunResult(np.array([tail]), np.zeros(1), np.zeros(1, dtype=int), tail, cost, None)


# -- aggregate -------------------------------------------------------------------

def test_aggregate_single():
    s = aggregate([fake(0.7, 3.0)])
    assert (s.mean_coop, s.std_coop, s.mean_total_cost, s.std_total_cost, s.samples) == \
        (0.7, 0.0, 3.0, 0.0, 1)


def test_aggregate_pair():
    s = aggregate([fake(0.0), fake(1.0)])
    assert s.mean_coop == 0.5
    assert s.std_coop == pytest.approx(np.std([0, 1], ddof=1), abs=0)


def test_aggregate_constant():
    s = aggregate([fake(0.3, 7.5)] * 300)
    assert s.std_coop == 0.0 and s.std_total_cost == 0.0
    assert s.mean_coop == 0.3 and s.samples == 300


def test_aggregate_empty():
    with pytest.raises(ContractError):
        aggregate([])


# -- seeds -----------------------------------------------------------------------

def test_seed_streams_are_distinct_and_stable():
    seeds = {derived_int_seed(graph_seed(0, g)) for g in range(10)}
    assert len(seeds) == 10
    assert derived_int_seed(graph_seed(5, 3)) == derived_int_seed(graph_seed(5, 3))
    a = strategy_seed(1, 0, 0).generate_state(2).tolist()
    b = strategy_seed(1, 0, 1).generate_state(2).tolist()
    assert a != b


def test_adding_grid_points_keeps_existing_cells():
    small = run_sweep(small_spec(theta_grid=(0.5,), threshold_grid=(50.0,)))
    big = run_sweep(small_spec())
    assert small.cells[0] == big.cell(0.5, 50.0)


# -- sweep -----------------------------------------------------------------------

def test_zero_theta_is_baseline():
    spec = small_spec(theta_grid=(0.0,), threshold_grid=(50.0, 80.0))
    grid = run_sweep(spec)
    base = run_sweep(small_spec(mechanism_kind="NONE", theta_grid=(0.0,),
                                threshold_grid=(0.0,)))
    for cell in grid.cells:
        assert cell.mechanism == "NONE"
        assert cell.mean_total_cost == 0
        assert cell.mean_coop == base.cells[0].mean_coop


def test_single_cell_equals_single_run():
    spec = small_spec(theta_grid=(1.0,), threshold_grid=(80.0,), graph_count=1,
                      realisations_per_graph=1)
    cell = run_sweep(spec).cells[0]
    g = generate(spec.graph_params(0))
    init = init_strategies(g.node_count, strategy_seed(spec.master_seed, 0, 0))
    cfg = SimConfig(mechanism=MechanismSpec("POP", p_c=80, theta=1), generations=20,
                    tail_window=5)
    res = run(g, cfg, init)
    assert cell.samples == 1
    assert (cell.mean_coop, cell.mean_total_cost) == (res.tail_coop, res.total_cost)
    assert cell.std_coop == 0 and cell.std_total_cost == 0


def test_paired_baseline_matches_standalone_runs():
    spec = small_spec(mechanism_kind="NONE", theta_grid=(0.0,), threshold_grid=(0.0,))
    cell = run_sweep(spec).cells[0]
    tails = []
    for gi, g in enumerate(load_graphs(spec)):
        for r in range(spec.realisations_per_graph):
            init = init_strategies(g.node_count, strategy_seed(spec.master_seed, gi, r))
            tails.append(run(g, SimConfig(generations=20, tail_window=5), init))
    assert cell.stats == aggregate(tails)


def test_cells_share_initial_states():
    spec = small_spec()
    g = load_graphs(spec)[1]
    a = initial_states(spec, 1, g.node_count)
    b = initial_states(spec, 1, g.node_count)
    assert np.array_equal(a, b)
    r1 = cell_results(spec, g, a, 0.5, 50.0)
    assert [r.coop_trajectory[0] for r in r1] == (a.sum(axis=1) / g.node_count).tolist()


def test_worker_count_does_not_change_results():
    spec = small_spec()
    a = run_sweep(spec, workers=1)
    b = run_sweep(spec, workers=2)
    assert a == b


def test_cost_bound_and_sample_size():
    spec = small_spec(theta_grid=(0.25, 50.0), threshold_grid=(10.0, 100.0))
    for cell in run_sweep(spec).cells:
        assert 0 <= cell.mean_coop <= 1
        assert cell.mean_total_cost <= cell.theta * 150 * spec.generations
        assert cell.samples == 12
        assert len(cell.per_graph_mean_coop) == 3


def test_raw_shape():
    coop, cost = run_sweep_raw(small_spec())
    assert coop.shape == cost.shape == (4, 3, 4)


def test_bad_cell_is_named():
    spec = small_spec(threshold_grid=(50.0, 150.0))
    with pytest.raises(ParameterError, match="threshold=150.0"):
        run_sweep(spec)


@pytest.mark.parametrize("kw", [dict(theta_grid=()), dict(graph_count=0),
                                dict(mechanism_kind="UNION"), dict(tail_window=30)])
def test_spec_validation(kw):
    with pytest.raises(ParameterError):
        small_spec(**kw)


def test_presets():
    spec = preset("ni_and_lc", "DMS", graph_count=2)
    assert spec.mechanism_kind == "NI_AND_LC"
    assert spec.gen_params.model == "DMS" and spec.gen_params.n == 5000
    m = spec.mechanism(1.0, 0.4)
    assert (m.c_i, m.n_c) == (0.05, 0.4)
    with pytest.raises(ParameterError):
        preset("nope")


def test_run_batch_accepts_sweep_initial_states():
    spec = small_spec()
    g = load_graphs(spec)[0]
    init = initial_states(spec, 0, g.node_count)
    res = run_batch(g, init, spec.payoff, spec.mechanism(5.0, 100.0), 20, 5)
    assert len(res) == 4
