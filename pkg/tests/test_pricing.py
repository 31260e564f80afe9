import itertools

import numpy as np
import pytest

from conftest import random_duals_instance
from posecg.instance import Detection, Instance, PartGraph
from posecg.master import DualValues, Flavor, TripleRow
from posecg.oracle import brute_force_price
from posecg.pricing import price_all, price_global, price_global_bnb, price_global_dp, price_local


def test_e1_zero_duals(e1):
    d = DualValues.zeros(3)
    g = price_global_dp(e1, 0, d)
    assert g.column.detections == (0, 1)
    assert g.reduced_cost == pytest.approx(-13.0) and g.violated
    assert price_local(e1, 1, d).column.locals == (2,)
    assert price_local(e1, 1, d).reduced_cost == pytest.approx(-3.5)
    assert price_local(e1, 2, d).reduced_cost == pytest.approx(-4.5)
    # the only neck has no same-part companions
    r = price_local(e1, 0, d)
    assert r.column is None and not r.violated


def test_heavy_duals_make_nothing_attractive(e1):
    big = np.full(3, 100.0)
    d = DualValues(big, big, np.zeros(3))
    loc, glob = price_all(e1, d)
    assert not any(r.violated for r in loc + glob)


def test_non_major_anchor_rejected(e1):
    with pytest.raises(ValueError):
        price_global_dp(e1, 1, DualValues.zeros(3))


def test_ties_pick_the_smallest_subset_lexicographically():
    g = PartGraph(("neck", "head"), frozenset({"neck"}), frozenset({frozenset({"neck", "head"})}))
    dets = (Detection(0, "neck", -5.0), Detection(1, "head", -1.0), Detection(2, "head", -1.0),
            Detection(3, "neck", -1.0))
    inst = Instance(g, dets, {}, 0.0)
    d = DualValues.zeros(4)
    assert price_global_dp(inst, 0, d).column.detections == (0, 1)
    assert price_local(inst, 1, d).column.locals == (2,)
    assert price_local(inst, 0, d).column.locals == (3,)


def test_dp_and_bnb_match_brute_force_on_random_duals():
    rng = np.random.default_rng(77)
    for _ in range(150):
        inst = random_duals_instance(rng, max_dets=10)
        n = len(inst)
        l1, l2, l3 = (rng.exponential(5, n) for _ in range(3))
        rows = []
        for t in itertools.combinations(range(n), 3):
            if len({inst.part_of[i] for i in t}) == 3 and rng.random() < 0.2:
                rows.append(TripleRow(t, Flavor.GLOBAL))
        d = DualValues(l1, l2, l3, rows, rng.exponential(5, len(rows)))
        for a in inst.major_detections:
            ref, arg = brute_force_price(inst, a, d, "global")
            r = price_global(inst, a, d)
            assert r.reduced_cost == pytest.approx(ref, abs=1e-9)
            assert r.reduced_cost == pytest.approx(price_global_bnb(inst, a, d).reduced_cost, abs=1e-9)


def test_threads_give_identical_results():
    rng = np.random.default_rng(4)
    inst = random_duals_instance(rng, max_dets=12)
    n = len(inst)
    d = DualValues(rng.random(n), rng.random(n), rng.random(n))
    assert price_all(inst, d) == price_all(inst, d, threads=4)
