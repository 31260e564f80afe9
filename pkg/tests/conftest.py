import numpy as np
import pytest

from posecg.instance import Detection, Instance, PartGraph, upper_body_graph
from posecg.synthetic import generate_synthetic


def e1_instance(positions: bool = False) -> Instance:
    """Neck d0 and two heads d1, d2 with omega = 3."""
    graph = PartGraph(("neck", "head"), frozenset({"neck"}), frozenset({frozenset({"neck", "head"})}))
    pos = [(10.0, 10.0), (10.0, 0.0), (12.0, 1.0)] if positions else [None] * 3
    dets = (Detection(0, "neck", -10.0, pos[0]), Detection(1, "head", -4.0, pos[1]),
            Detection(2, "head", -3.0, pos[2]))
    return Instance(graph, dets, {(0, 1): -2.0, (0, 2): -1.0, (1, 2): -0.5}, 3.0)


def odd_cycle_instance() -> Instance:
    """Three pairwise-overlapping poses whose LP optimum puts 1/2 on each.

    Poses {n1, h}, {n1, s} and {n2, h, s} cost -25, -13 and -25 (the ids are
    n1 = 0, n2 = 1, h = 2, s = 3). Their half-sum, -31.5, beats every
    integral selection (best -30); the triple row on {n1, h, s} cuts it
    off. Costs were found by a small search and checked against the
    brute-force LP and ILP.
    """
    dets = (Detection(0, "neck", -28.0), Detection(1, "neck", -7.0),
            Detection(2, "head", -34.0), Detection(3, "r_shoulder", -20.0))
    pw = {(0, 1): 100.0, (0, 2): 7.0, (0, 3): 5.0, (1, 2): -6.0, (1, 3): -2.0, (2, 3): 14.0}
    return Instance(upper_body_graph(), dets, pw, 30.0)


def tiny_instance(seed: int) -> Instance:
    """A1 family: at most 8 detections on the head/neck/shoulders graph."""
    return generate_synthetic(seed, 1 + seed % 2, 0.4, 0.3, part_graph=upper_body_graph(), max_detections=8)


def small_instance(seed: int) -> Instance:
    """A2 family: at most 10 detections."""
    return generate_synthetic(seed, 1 + seed % 3, 0.5, 0.4, part_graph=upper_body_graph(), max_detections=10)


def random_duals_instance(rng: np.random.Generator, max_dets: int = 12) -> Instance:
    seed = int(rng.integers(1 << 30))
    return generate_synthetic(seed, int(rng.integers(1, 4)), float(rng.uniform(0.2, 0.7)),
                              float(rng.uniform(0.0, 0.6)), part_graph=upper_body_graph(),
                              max_detections=int(rng.integers(3, max_dets + 1)))


@pytest.fixture
def e1():
    return e1_instance()


@pytest.fixture
def odd_cycle():
    return odd_cycle_instance()
