import numpy as np
import pytest

from conftest import e1_instance, odd_cycle_instance, small_instance, tiny_instance
from posecg.instance import Detection, Instance, empty_instance
from posecg.oracle import brute_force_solve, check_solution
from posecg.solver import (
    IterationCapReached,
    SolverConfig,
    is_fractional,
    run_column_generation,
    solution_from_dict,
    solve,
)


def test_e1_optimum(e1):
    sol, report = solve(e1)
    assert sol.objective == pytest.approx(-16.5)
    assert [p.column.detections for p in sol.poses] == [(0, 1)]
    assert [(l.anchor, l.locals) for l in sol.poses[0].locals] == [(1, (2,))]
    assert sol.false_positives == ()
    assert report.certified and not report.capped


def test_empty_instance():
    sol, report = solve(empty_instance())
    assert sol.poses == [] and sol.objective == 0.0
    assert report.n_columns == 0


def test_all_positive_costs_stop_at_first_round(odd_cycle):
    inst = Instance(odd_cycle.part_graph, tuple(Detection(d.id, d.part, 5.0) for d in odd_cycle.detections),
                    {k: abs(v) for k, v in odd_cycle.pairwise.items()}, 1.0)
    res = run_column_generation(inst)
    assert res.iterations == 1 and len(res.pool) == 0
    sol, _ = solve(inst)
    assert sol.poses == [] and sol.false_positives == (0, 1, 2, 3)


def test_branch_and_bound_closes_the_odd_cycle_without_triples(odd_cycle):
    sol, report = solve(odd_cycle, SolverConfig(enable_triples=False))
    assert not report.lp_integral and report.bnb_nodes > 0
    assert report.lp_objective == pytest.approx(-31.5)
    assert sol.objective == pytest.approx(-30.0)
    sol2, report2 = solve(odd_cycle)
    assert report2.lp_integral and report2.n_triple_rows >= 1
    assert sol2.objective == pytest.approx(-30.0)


def test_separable_instance_adds_up():
    # two copies of E1; an absent pair costs zero, so cross pairs get a large penalty
    a = e1_instance()
    g = a.part_graph
    dets = a.detections + tuple(Detection(d.id + 3, d.part, d.theta) for d in a.detections)
    pw = dict(a.pairwise)
    pw.update({(i + 3, j + 3): v for (i, j), v in a.pairwise.items()})
    pw.update({(i, j): 100.0 for i in range(3) for j in range(3, 6) if dets[i].part == dets[j].part
               or g.has_edge(dets[i].part, dets[j].part)})
    sol, _ = solve(Instance(g, dets, pw, a.omega))
    assert sol.objective == pytest.approx(-33.0)


def test_history_monotone_and_weak_duality():
    for seed in range(30):
        inst = small_instance(seed)
        res = run_column_generation(inst)
        h = np.array(res.history)
        assert np.all(np.diff(h) <= 1e-9)
        # any integral solution is an upper bound on the LP value
        sol, _ = solve(inst)
        assert res.lp_objective <= sol.objective + 1e-9
        assert res.duals.objective() == pytest.approx(res.lp_objective, abs=1e-7)


def test_threads_and_repeat_runs_agree():
    for seed in range(20):
        inst = small_instance(seed)
        a, ra = solve(inst)
        b, rb = solve(inst, SolverConfig(threads=3))
        assert a.to_dict(inst) == b.to_dict(inst)
        assert ra.to_dict() == rb.to_dict()


def test_iteration_cap_keeps_state():
    inst = small_instance(2)
    with pytest.raises(IterationCapReached) as exc:
        run_column_generation(inst, SolverConfig(max_iterations=1))
    assert len(exc.value.result.pool) > 0
    sol, report = solve(inst, SolverConfig(max_iterations=1))
    assert report.capped
    assert check_solution(inst, sol) == []


def test_solution_round_trip():
    for seed in range(20):
        inst = tiny_instance(seed)
        sol, _ = solve(inst)
        data = sol.to_dict(inst)
        again = solution_from_dict(inst, data).to_dict(inst)
        assert again.pop("objective") == pytest.approx(data.pop("objective"))
        assert again == data
        assert sol.objective == pytest.approx(brute_force_solve(inst).objective)


def test_is_fractional():
    assert not is_fractional(np.array([0.0, 1.0, 1e-9]))
    assert is_fractional(np.array([0.0, 0.5]))
