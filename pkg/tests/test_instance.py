import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from posecg.instance import (
    BODY_PARTS,
    MAX_DETECTIONS_PER_PART,
    InstanceError,
    body_graph,
    conditional_cycle,
    empty_instance,
    load_instance,
    save_instance,
    upper_body_graph,
    validate_instance,
)
from posecg.synthetic import generate_synthetic


def raw_body(**extra):
    g = body_graph()
    raw = {"parts": list(g.parts), "major_parts": ["neck"],
           "edges": [list(e) for e in g.sorted_edges()], "detections": [], "pairwise": []}
    raw.update(extra)
    return raw


def codes(raw, **kw):
    with pytest.raises(InstanceError) as exc:
        validate_instance(raw, **kw)
    return exc.value.codes


def test_empty_body_instance_is_valid():
    inst = validate_instance(raw_body())
    assert len(inst) == 0
    assert inst.parts == BODY_PARTS
    assert inst.omega == 30.0


def test_illegal_pair_between_wrist_and_ankle():
    raw = raw_body(detections=[{"id": 0, "part": "l_wrist", "theta": 1}, {"id": 1, "part": "r_ankle", "theta": 1}],
                   pairwise=[{"d1": 0, "d2": 1, "phi": 1}])
    assert codes(raw) == ["IllegalPairwisePartPair"]


def test_head_to_shoulders_and_neck_edges_is_a_forest_without_neck():
    assert conditional_cycle(BODY_PARTS, body_graph().edges, "neck") is None
    # head-shoulder-neck triangle survives only if the neck stays
    assert conditional_cycle(BODY_PARTS, body_graph().edges, "head") is not None


def test_every_error_is_reported():
    raw = {
        "parts": ["a", "b", "a"],
        "major_parts": ["zzz"],
        "edges": [["a", "a"], ["a", "b"], ["b", "a"], ["a", "q"]],
        "detections": [{"id": 0, "part": "a", "theta": 0}, {"id": 0, "part": "b", "theta": 0},
                       {"id": 2, "part": "b", "theta": 0}],
        "pairwise": [{"d1": 0, "d2": 0, "phi": 1}, {"d1": 0, "d2": 7, "phi": 1}],
    }
    got = set(codes(raw))
    assert {"DuplicatePart", "UnknownPart", "NoMajorPart", "SelfLoopEdge", "DuplicateEdge",
            "DuplicateDetectionId", "NonDenseDetectionIds", "DiagonalPairwise", "UnknownDetection"} <= got


def test_cycle_in_conditional_graph_rejected():
    raw = {"parts": ["n", "a", "b", "c"], "major_parts": ["n"],
           "edges": [["a", "b"], ["b", "c"], ["c", "a"], ["n", "a"]]}
    assert codes(raw) == ["ConditionalGraphNotForest"]


def test_too_many_detections_per_part():
    dets = [{"id": i, "part": "neck", "theta": -1} for i in range(MAX_DETECTIONS_PER_PART + 1)]
    assert codes(raw_body(detections=dets)) == ["TooManyDetections"]


def test_duplicate_pairwise_in_either_order():
    dets = [{"id": 0, "part": "neck", "theta": 0}, {"id": 1, "part": "head", "theta": 0}]
    pw = [{"d1": 0, "d2": 1, "phi": 1}, {"d1": 1, "d2": 0, "phi": 2}]
    assert codes(raw_body(detections=dets, pairwise=pw)) == ["DuplicatePairwise"]


def test_unknown_keys_warn_or_fail():
    raw = raw_body(colour="red")
    with pytest.warns(UserWarning):
        validate_instance(raw)
    assert codes(raw, strict=True) == ["UnknownKey"]


def test_pairwise_lookup_is_symmetric(e1):
    assert e1.phi(1, 0) == e1.phi(0, 1) == -2.0
    assert e1.phi(0, 0) == 0.0


def test_round_trip_and_idempotent(tmp_path):
    inst = generate_synthetic(3, 2, 0.3, 0.2)
    again = validate_instance(json.loads(json.dumps(inst.to_dict())))
    assert again == inst
    path = tmp_path / "i.json"
    save_instance(inst, path)
    assert load_instance(path) == inst


def test_scaled_multiplies_every_cost(e1):
    s = e1.scaled(2.0)
    assert s.omega == 6.0
    assert s.theta == (-20.0, -8.0, -6.0)
    assert s.pairwise[(1, 2)] == -1.0


def test_presets():
    g = upper_body_graph()
    assert g.major_parts == {"neck"}
    # 13 tree edges plus neck links to the 8 parts not adjacent to it
    assert len(body_graph(False).edges) == 21
    assert len(body_graph().edges) == 25
    assert len(empty_instance()) == 0


# generator

def test_generator_no_people_only_clutter():
    inst = generate_synthetic(7, 0, 0.3, 0.5)
    assert all(d.theta > 0 for d in inst.detections)


def test_generator_deterministic():
    a = generate_synthetic(7, 2, 0.3, 0.1)
    b = generate_synthetic(7, 2, 0.3, 0.1)
    assert a == b
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    assert a != generate_synthetic(8, 2, 0.3, 0.1)


def test_generator_cap_per_part():
    inst = generate_synthetic(7, 2, 0.3, 0.1)
    counts = {p: len(ids) for p, ids in inst.by_part.items()}
    assert max(counts.values()) <= MAX_DETECTIONS_PER_PART
    crowded = generate_synthetic(1, 12, 1.0, 1.0)
    assert max(len(ids) for ids in crowded.by_part.values()) == MAX_DETECTIONS_PER_PART


def test_generator_clamps_rates_and_truncates():
    inst = generate_synthetic(2, -3, 5.0, -1.0)
    assert len(inst) == 0
    inst = generate_synthetic(2, 3, 0.3, 0.3, max_detections=20)
    assert len(inst) == 20


def test_generator_outputs_validate_for_many_seeds():
    for seed in range(1000):
        inst = generate_synthetic(seed, seed % 4, 0.3, 0.2, part_graph=upper_body_graph() if seed % 2 else None)
        assert validate_instance(inst.to_dict()) == inst


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.data())
def test_random_illegal_pairs_always_rejected(seed, data):
    inst = generate_synthetic(seed, 2, 0.3, 0.2)
    raw = inst.to_dict()
    g = inst.part_graph
    illegal = [(a.id, b.id) for a in inst.detections for b in inst.detections
               if a.id < b.id and a.part != b.part and not g.has_edge(a.part, b.part)]
    if not illegal:
        return
    a, b = data.draw(st.sampled_from(illegal))
    raw["pairwise"].append({"d1": a, "d2": b, "phi": float(np.pi)})
    assert "IllegalPairwisePartPair" in codes(raw)
