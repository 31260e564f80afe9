import numpy as np

from posecg.instance import Detection, Instance, PartGraph
from posecg.master import ColumnPool, Flavor, GlobalPoseColumn, LocalAssignmentColumn, TripleRow
from posecg.rowgen import separate_triples_global, separate_triples_local


def odd_pool(inst):
    pool = ColumnPool()
    for ids in ([0, 2], [0, 3], [1, 2, 3]):
        pool.add(inst, GlobalPoseColumn.build(inst, ids))
    return pool


def test_half_weight_odd_cycle_is_separated(odd_cycle):
    pool = odd_pool(odd_cycle)
    rows = separate_triples_global(odd_cycle, pool, [0.5, 0.5, 0.5])
    assert rows == [TripleRow((0, 2, 3), Flavor.GLOBAL)]
    # already present rows are not returned again
    assert separate_triples_global(odd_cycle, pool, [0.5, 0.5, 0.5], existing=rows) == []
    assert separate_triples_global(odd_cycle, pool, [0.5, 0.5, 0.5], full=True) == rows


def test_integral_solution_has_no_violation(odd_cycle):
    pool = odd_pool(odd_cycle)
    assert separate_triples_global(odd_cycle, pool, [1.0, 0.0, 0.0]) == []
    assert separate_triples_global(odd_cycle, pool, [0.0, 0.0, 1.0], full=True) == []


def heads(k):
    g = PartGraph(("neck", "head"), frozenset({"neck"}), frozenset({frozenset({"neck", "head"})}))
    dets = tuple(Detection(i, "head", -1.0) for i in range(k)) + (Detection(k, "neck", -1.0),)
    return Instance(g, dets, {}, 0.0)


def test_local_triples_and_top_k():
    inst = heads(5)
    pool = ColumnPool()
    for a, b in [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]:
        pool.add(inst, LocalAssignmentColumn.build(inst, a, [b]))
    psi = np.full(len(pool), 0.5)
    rows = separate_triples_local(inst, pool, psi)
    assert {r.dets for r in rows} == {(0, 1, 2), (2, 3, 4)}
    assert all(r.flavor is Flavor.LOCAL for r in rows)
    assert len(separate_triples_local(inst, pool, psi, top_k=1)) == 1
    # below the tolerance nothing fires
    assert separate_triples_local(inst, pool, np.full(len(pool), 0.33)) == []
