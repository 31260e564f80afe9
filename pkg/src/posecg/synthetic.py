"""Deterministic synthetic instances: noisy skeletons, duplicates and clutter."""

from __future__ import annotations

import math

import numpy as np

from .instance import (
    DEFAULT_OMEGA,
    MAX_DETECTIONS_PER_PART,
    Detection,
    Instance,
    PartGraph,
    body_graph,
)

# canonical skeleton, y grows downwards, units of pixels for a ~200px person
TEMPLATE = {
    "head": (0.0, -70.0),
    "neck": (0.0, -45.0),
    "r_shoulder": (-22.0, -40.0), "l_shoulder": (22.0, -40.0),
    "r_elbow": (-30.0, -10.0), "l_elbow": (30.0, -10.0),
    "r_wrist": (-32.0, 18.0), "l_wrist": (32.0, 18.0),
    "r_hip": (-14.0, 20.0), "l_hip": (14.0, 20.0),
    "r_knee": (-16.0, 65.0), "l_knee": (16.0, 65.0),
    "r_ankle": (-17.0, 110.0), "l_ankle": (17.0, 110.0),
}

WIDTH, HEIGHT = 640.0, 480.0
MAX_DUPLICATES = 3
MAX_FALSE_POSITIVES = 2
VISIBILITY = 0.9
SAME_PART_CAP = 10.0
EDGE_CAP = 15.0


def _template_offset(part: str, k: int) -> tuple[float, float]:
    if part in TEMPLATE:
        return TEMPLATE[part]
    ang = 2 * math.pi * k / 7
    return (40.0 * math.cos(ang), 40.0 * math.sin(ang))


def generate_synthetic(seed: int, n_people: int, dup_rate: float = 0.3, fp_rate: float = 0.1,
                       part_graph: PartGraph | None = None, omega: float = DEFAULT_OMEGA,
                       max_detections: int | None = None) -> Instance:
    """Random instance with ``n_people`` people.

    Every visible part of a person yields one detection plus
    ``Binomial(3, dup_rate)`` nearby duplicates; each part also receives
    ``Binomial(2, fp_rate)`` clutter detections. The neck of every person is
    always visible. Unary costs are negative for true detections and positive
    for clutter, and scale with ``14 / len(parts)`` so that ``omega`` keeps the
    same meaning on reduced part graphs. Pairwise costs reward same-part
    proximity and limb lengths close to the template. ``max_detections``
    truncates the detection list, dropping clutter first, then duplicates.
    """
    graph = part_graph or body_graph()
    rng = np.random.default_rng(seed)
    n_people = max(0, int(n_people))
    dup_rate = min(max(float(dup_rate), 0.0), 1.0)
    fp_rate = min(max(float(fp_rate), 0.0), 1.0)
    scale = 14.0 / len(graph.parts)
    offsets = {p: _template_offset(p, k) for k, p in enumerate(graph.parts)}

    # raw records: (part, x, y, theta, priority) with priority 0 true, 1 dup, 2 clutter
    raw: list[tuple[str, float, float, float, int]] = []
    spacing = WIDTH / (n_people + 1) if n_people else WIDTH
    for k in range(n_people):
        cx = spacing * (k + 1) + rng.normal(0, 10)
        cy = HEIGHT / 2 + rng.normal(0, 20)
        size = rng.uniform(0.8, 1.2)
        for p in graph.parts:
            if p not in graph.major_parts and rng.random() > VISIBILITY:
                continue
            ox, oy = offsets[p]
            x = cx + size * ox + rng.normal(0, 3)
            y = cy + size * oy + rng.normal(0, 3)
            raw.append((p, x, y, -scale * rng.uniform(3.0, 8.0), 0))
            for _ in range(rng.binomial(MAX_DUPLICATES, dup_rate)):
                raw.append((p, x + rng.normal(0, 4), y + rng.normal(0, 4),
                            -scale * rng.uniform(0.5, 4.0), 1))
    for p in graph.parts:
        for _ in range(rng.binomial(MAX_FALSE_POSITIVES, fp_rate)):
            raw.append((p, rng.uniform(0, WIDTH), rng.uniform(0, HEIGHT),
                        scale * rng.uniform(1.0, 6.0), 2))

    # enforce the per-part cap, then the global cap, keeping higher-priority records
    keep = []
    per_part: dict[str, int] = {}
    for i in sorted(range(len(raw)), key=lambda i: (raw[i][4], i)):
        p = raw[i][0]
        if per_part.get(p, 0) >= MAX_DETECTIONS_PER_PART:
            continue
        if max_detections is not None and len(keep) >= max_detections:
            break
        per_part[p] = per_part.get(p, 0) + 1
        keep.append(i)
    keep.sort()

    dets = tuple(
        Detection(j, raw[i][0], round(float(raw[i][3]), 6), (round(float(raw[i][1]), 3), round(float(raw[i][2]), 3)))
        for j, i in enumerate(keep)
    )
    pairwise = _pairwise_costs(dets, graph, offsets, scale)
    return Instance(graph, dets, pairwise, float(omega))


def _pairwise_costs(dets, graph: PartGraph, offsets, scale: float) -> dict[tuple[int, int], float]:
    out = {}
    for a in dets:
        for b in dets:
            if b.id <= a.id:
                continue
            dx = a.position[0] - b.position[0]
            dy = a.position[1] - b.position[1]
            dist = math.hypot(dx, dy)
            if a.part == b.part:
                # close duplicates attract, distinct people repel
                v = scale * min(dist / 10.0 - 2.0, SAME_PART_CAP)
            elif graph.has_edge(a.part, b.part):
                (ax, ay), (bx, by) = offsets[a.part], offsets[b.part]
                expect = math.hypot(ax - bx, ay - by)
                err = abs(dist - expect) / max(expect, 1.0)
                v = scale * min(4.0 * err - 1.5, EDGE_CAP)
            else:
                continue
            out[(a.id, b.id)] = round(v, 6)
    return out
