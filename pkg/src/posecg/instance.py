"""Problem data for two-tier multi-person pose estimation.

An :class:`Instance` holds the part graph, the detections with their unary
costs, the sparse pairwise costs and the pose-instancing cost ``omega``.
Instances are built through :func:`validate_instance`, which reports every
structural problem at once instead of stopping at the first one.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping

logger = logging.getLogger(__name__)

DEFAULT_OMEGA = 30.0
MAX_DETECTIONS_PER_PART = 15

_TOP_LEVEL_KEYS = {"parts", "major_parts", "edges", "detections", "pairwise", "omega"}
_DETECTION_KEYS = {"id", "part", "x", "y", "theta"}
_PAIRWISE_KEYS = {"d1", "d2", "phi"}


class InstanceError(ValueError):
    """Raised when raw instance data violates one or more structural rules.

    ``errors`` is a list of ``(code, message)`` pairs, one per violation.
    """

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = list(errors)
        lines = [f"{code}: {msg}" for code, msg in self.errors]
        super().__init__("invalid instance:\n  " + "\n  ".join(lines))

    @property
    def codes(self) -> list[str]:
        return [code for code, _ in self.errors]


def _find(parent: dict, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def conditional_cycle(parts: Iterable[str], edges: Iterable[frozenset], removed: str):
    """Return an edge closing a cycle once ``removed`` is conditioned away, else None."""
    parent = {p: p for p in parts if p != removed}
    for e in sorted(edges, key=sorted):
        if removed in e:
            continue
        a, b = sorted(e)
        ra, rb = _find(parent, a), _find(parent, b)
        if ra == rb:
            return (a, b)
        parent[ra] = rb
    return None


@dataclass(frozen=True)
class PartGraph:
    parts: tuple[str, ...]
    major_parts: frozenset[str]
    edges: frozenset[frozenset[str]]

    @cached_property
    def index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.parts)}

    def has_edge(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.edges

    def neighbors(self, part: str) -> list[str]:
        out = [next(iter(e - {part})) for e in self.edges if part in e]
        return sorted(out, key=self.index.__getitem__)

    def sorted_edges(self) -> list[tuple[str, str]]:
        idx = self.index
        pairs = [tuple(sorted(e, key=idx.__getitem__)) for e in self.edges]
        return sorted(pairs, key=lambda ab: (idx[ab[0]], idx[ab[1]]))


@dataclass(frozen=True)
class Detection:
    id: int
    part: str
    theta: float
    position: tuple[float, float] | None = None


@dataclass(frozen=True)
class Instance:
    part_graph: PartGraph
    detections: tuple[Detection, ...]
    pairwise: Mapping[tuple[int, int], float]
    omega: float = DEFAULT_OMEGA

    def __len__(self) -> int:
        return len(self.detections)

    @property
    def parts(self) -> tuple[str, ...]:
        return self.part_graph.parts

    @cached_property
    def theta(self) -> tuple[float, ...]:
        return tuple(d.theta for d in self.detections)

    @cached_property
    def part_of(self) -> tuple[str, ...]:
        return tuple(d.part for d in self.detections)

    @cached_property
    def by_part(self) -> dict[str, tuple[int, ...]]:
        out: dict[str, list[int]] = {p: [] for p in self.parts}
        for d in self.detections:
            out[d.part].append(d.id)
        return {p: tuple(ids) for p, ids in out.items()}

    @cached_property
    def major_detections(self) -> tuple[int, ...]:
        major = self.part_graph.major_parts
        return tuple(d.id for d in self.detections if d.part in major)

    def phi(self, d1: int, d2: int) -> float:
        if d1 > d2:
            d1, d2 = d2, d1
        return self.pairwise.get((d1, d2), 0.0)

    @property
    def has_positions(self) -> bool:
        return all(d.position is not None for d in self.detections)

    def replace(self, **changes) -> "Instance":
        fields = dict(part_graph=self.part_graph, detections=self.detections,
                      pairwise=self.pairwise, omega=self.omega)
        fields.update(changes)
        return Instance(**fields)

    def scaled(self, s: float) -> "Instance":
        """Copy with every cost (theta, phi, omega) multiplied by ``s``."""
        dets = tuple(Detection(d.id, d.part, d.theta * s, d.position) for d in self.detections)
        pw = {k: v * s for k, v in self.pairwise.items()}
        return self.replace(detections=dets, pairwise=pw, omega=self.omega * s)

    def to_dict(self) -> dict[str, Any]:
        g = self.part_graph
        dets = []
        for d in self.detections:
            rec: dict[str, Any] = {"id": d.id, "part": d.part}
            if d.position is not None:
                rec["x"], rec["y"] = d.position
            rec["theta"] = d.theta
            dets.append(rec)
        return {
            "parts": list(g.parts),
            "major_parts": [p for p in g.parts if p in g.major_parts],
            "edges": [list(e) for e in g.sorted_edges()],
            "detections": dets,
            "pairwise": [{"d1": a, "d2": b, "phi": v} for (a, b), v in sorted(self.pairwise.items())],
            "omega": self.omega,
        }


def validate_instance(raw: Mapping[str, Any], strict: bool = False) -> Instance:
    """Build an :class:`Instance` from parsed JSON-like data.

    Every violated rule is collected and raised together as an
    :class:`InstanceError`. Unknown keys are errors when ``strict`` and
    warnings otherwise.
    """
    errors: list[tuple[str, str]] = []

    def unknown(keys, allowed, where):
        extra = sorted(set(keys) - allowed)
        if not extra:
            return
        msg = f"unknown keys in {where}: {extra}"
        if strict:
            errors.append(("UnknownKey", msg))
        else:
            warnings.warn(msg, stacklevel=3)

    unknown(raw.keys(), _TOP_LEVEL_KEYS, "instance")

    parts = tuple(raw.get("parts", ()))
    part_set = set(parts)
    if len(part_set) != len(parts):
        errors.append(("DuplicatePart", "part names must be unique"))

    major = []
    for p in raw.get("major_parts", ()):
        if p not in part_set:
            errors.append(("UnknownPart", f"major part {p!r} is not in parts"))
        else:
            major.append(p)
    if not major:
        errors.append(("NoMajorPart", "at least one major part is required"))

    edges: set[frozenset[str]] = set()
    for e in raw.get("edges", ()):
        a, b = e
        bad = [p for p in (a, b) if p not in part_set]
        for p in bad:
            errors.append(("UnknownPart", f"edge {a!r}-{b!r} references unknown part {p!r}"))
        if bad:
            continue
        if a == b:
            errors.append(("SelfLoopEdge", f"edge {a!r}-{a!r} is a self loop"))
            continue
        key = frozenset((a, b))
        if key in edges:
            errors.append(("DuplicateEdge", f"edge {a!r}-{b!r} listed twice"))
        edges.add(key)

    for m in major:
        cyc = conditional_cycle(parts, edges, m)
        if cyc is not None:
            errors.append((
                "ConditionalGraphNotForest",
                f"removing major part {m!r} leaves a cycle through edge {cyc[0]}-{cyc[1]}",
            ))

    dets: dict[int, Detection] = {}
    for rec in raw.get("detections", ()):
        unknown(rec.keys(), _DETECTION_KEYS, f"detection {rec.get('id')}")
        did, part = int(rec["id"]), rec["part"]
        if part not in part_set:
            errors.append(("UnknownPart", f"detection {did} has unknown part {part!r}"))
        if did in dets:
            errors.append(("DuplicateDetectionId", f"detection id {did} appears more than once"))
            continue
        pos = None
        if "x" in rec or "y" in rec:
            pos = (float(rec["x"]), float(rec["y"]))
        dets[did] = Detection(did, part, float(rec["theta"]), pos)

    n = len(dets)
    missing = sorted(set(range(n)) - set(dets))
    if missing:
        errors.append(("NonDenseDetectionIds", f"ids must be 0..{n - 1}; missing {missing}"))

    counts: dict[str, int] = {}
    for d in dets.values():
        counts[d.part] = counts.get(d.part, 0) + 1
    for p, k in counts.items():
        if k > MAX_DETECTIONS_PER_PART:
            errors.append(("TooManyDetections",
                           f"part {p!r} has {k} detections (limit {MAX_DETECTIONS_PER_PART})"))

    pairwise: dict[tuple[int, int], float] = {}
    for rec in raw.get("pairwise", ()):
        unknown(rec.keys(), _PAIRWISE_KEYS, "pairwise entry")
        a, b, v = int(rec["d1"]), int(rec["d2"]), float(rec["phi"])
        if a == b:
            errors.append(("DiagonalPairwise", f"pairwise entry on ({a},{a})"))
            continue
        if a not in dets or b not in dets:
            errors.append(("UnknownDetection", f"pairwise entry ({a},{b}) references a missing detection"))
            continue
        pa, pb = dets[a].part, dets[b].part
        if pa != pb and frozenset((pa, pb)) not in edges:
            errors.append(("IllegalPairwisePartPair",
                           f"pairwise entry ({a},{b}) joins parts {pa!r},{pb!r} with no edge"))
            continue
        key = (min(a, b), max(a, b))
        if key in pairwise:
            errors.append(("DuplicatePairwise", f"pairwise entry {key} listed twice"))
            continue
        pairwise[key] = v

    omega = float(raw.get("omega", DEFAULT_OMEGA))

    if errors:
        raise InstanceError(errors)

    graph = PartGraph(parts, frozenset(major), frozenset(edges))
    return Instance(graph, tuple(dets[i] for i in range(n)), pairwise, omega)


def load_instance(path: str | Path, strict: bool = False) -> Instance:
    with open(path) as f:
        raw = json.load(f)
    return validate_instance(raw, strict=strict)


def save_instance(instance: Instance, path: str | Path) -> None:
    with open(path, "w") as f:
        json.dump(instance.to_dict(), f, indent=1)
        f.write("\n")


# -- presets -------------------------------------------------------------

BODY_PARTS = (
    "head", "neck",
    "r_shoulder", "l_shoulder", "r_elbow", "l_elbow", "r_wrist", "l_wrist",
    "r_hip", "l_hip", "r_knee", "l_knee", "r_ankle", "l_ankle",
)

_TREE = [
    ("head", "neck"),
    ("neck", "r_shoulder"), ("neck", "l_shoulder"),
    ("r_shoulder", "r_elbow"), ("l_shoulder", "l_elbow"),
    ("r_elbow", "r_wrist"), ("l_elbow", "l_wrist"),
    ("neck", "r_hip"), ("neck", "l_hip"),
    ("r_hip", "r_knee"), ("l_hip", "l_knee"),
    ("r_knee", "r_ankle"), ("l_knee", "l_ankle"),
]
_EXTRA = [
    ("l_hip", "l_shoulder"), ("r_hip", "r_shoulder"),
    ("head", "l_shoulder"), ("head", "r_shoulder"),
]


def body_graph(extra_edges: bool = True) -> PartGraph:
    """Fourteen-part body model with the neck as the only major part.

    The kinematic tree is augmented with neck edges to every part not already
    adjacent to it; ``extra_edges`` adds hip-shoulder and head-shoulder links,
    which keep the graph a tree once the neck is fixed.
    """
    edges = {frozenset(e) for e in _TREE}
    for p in BODY_PARTS:
        if p != "neck":
            edges.add(frozenset(("neck", p)))
    if extra_edges:
        edges.update(frozenset(e) for e in _EXTRA)
    return PartGraph(BODY_PARTS, frozenset({"neck"}), frozenset(edges))


def upper_body_graph() -> PartGraph:
    """Four-part head/neck/shoulders model, handy for brute-force sized tests."""
    parts = ("head", "neck", "r_shoulder", "l_shoulder")
    edges = [("head", "neck"), ("neck", "r_shoulder"), ("neck", "l_shoulder"),
             ("head", "r_shoulder"), ("head", "l_shoulder")]
    return PartGraph(parts, frozenset({"neck"}), frozenset(frozenset(e) for e in edges))


def empty_instance(graph: PartGraph | None = None, omega: float = DEFAULT_OMEGA) -> Instance:
    return Instance(graph or body_graph(), (), {}, omega)
