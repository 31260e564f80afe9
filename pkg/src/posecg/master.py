"""Column pool, cost evaluation and the restricted master LP.

Columns come in two kinds. A :class:`GlobalPoseColumn` is a set of
detections with at most one per part and at least one major part. A
:class:`LocalAssignmentColumn` groups same-part detections around an anchor
detection that must itself be global in some selected pose.

Master rows, in order:

* family 1, one per detection: ``G gamma + L psi <= 1``
* family 2, one per detection: ``L psi + M psi <= 1``
* family 3, one per detection: ``-G gamma + M psi <= 0``
* one row per global triple, then one per local triple: ``C gamma <= 1``
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .instance import Instance
from .lp import DenseLP, LPSolution

COST_TOL = 1e-9


class InvalidPose(ValueError):
    pass


class InvalidLocalAssignment(ValueError):
    pass


class CostMismatch(ValueError):
    pass


def _pair_sum(instance: Instance, ids: Sequence[int]) -> float:
    total = 0.0
    pw = instance.pairwise
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            total += pw.get((a, b) if a < b else (b, a), 0.0)
    return total


def check_pose(instance: Instance, detections: Iterable[int]) -> tuple[int, ...]:
    ids = tuple(sorted(set(detections)))
    n = len(instance)
    if not ids:
        raise InvalidPose("a global pose needs at least one detection")
    if ids[0] < 0 or ids[-1] >= n:
        raise InvalidPose(f"unknown detection in {ids}")
    parts = [instance.part_of[d] for d in ids]
    if len(set(parts)) != len(parts):
        raise InvalidPose(f"pose {ids} uses a part more than once")
    if not any(p in instance.part_graph.major_parts for p in parts):
        raise InvalidPose(f"pose {ids} has no major-part detection")
    return ids


def check_local(instance: Instance, anchor: int, locals_: Iterable[int]) -> tuple[int, ...]:
    ids = tuple(sorted(set(locals_)))
    n = len(instance)
    if not ids:
        raise InvalidLocalAssignment("a local assignment needs at least one local detection")
    if not 0 <= anchor < n or ids[0] < 0 or ids[-1] >= n:
        raise InvalidLocalAssignment("unknown detection id")
    if anchor in ids:
        raise InvalidLocalAssignment(f"anchor {anchor} also listed as local")
    part = instance.part_of[anchor]
    if any(instance.part_of[d] != part for d in ids):
        raise InvalidLocalAssignment(f"locals {ids} do not all share the anchor's part {part!r}")
    return ids


def compute_gamma(instance: Instance, detections: Iterable[int]) -> float:
    """Cost of a global pose: omega + unary costs + pairwise costs inside it."""
    ids = check_pose(instance, detections)
    return instance.omega + sum(instance.theta[d] for d in ids) + _pair_sum(instance, ids)


def compute_psi(instance: Instance, anchor: int, locals_: Iterable[int]) -> float:
    """Cost of a local assignment.

    The anchor's unary cost is excluded; it is already paid by the global pose
    that holds the anchor. Pairwise costs include anchor-local pairs.
    """
    ids = check_local(instance, anchor, locals_)
    body = tuple(sorted(ids + (anchor,)))
    return sum(instance.theta[d] for d in ids) + _pair_sum(instance, body)


@dataclass(frozen=True)
class GlobalPoseColumn:
    detections: tuple[int, ...]
    cost: float

    @classmethod
    def build(cls, instance: Instance, detections: Iterable[int]) -> "GlobalPoseColumn":
        ids = check_pose(instance, detections)
        return cls(ids, compute_gamma(instance, ids))

    @property
    def signature(self) -> tuple:
        return ("G",) + self.detections

    @property
    def members(self) -> tuple[int, ...]:
        return self.detections


@dataclass(frozen=True)
class LocalAssignmentColumn:
    anchor: int
    locals: tuple[int, ...]
    cost: float

    @classmethod
    def build(cls, instance: Instance, anchor: int, locals_: Iterable[int]) -> "LocalAssignmentColumn":
        ids = check_local(instance, anchor, locals_)
        return cls(anchor, ids, compute_psi(instance, anchor, ids))

    @property
    def signature(self) -> tuple:
        return ("L", self.anchor) + self.locals

    @property
    def members(self) -> tuple[int, ...]:
        """Anchor and locals together, sorted."""
        return tuple(sorted(self.locals + (self.anchor,)))


Column = GlobalPoseColumn | LocalAssignmentColumn


class Flavor(enum.Enum):
    GLOBAL = "global"
    LOCAL = "local"


@dataclass(frozen=True)
class TripleRow:
    dets: tuple[int, int, int]
    flavor: Flavor

    def __post_init__(self):
        if len(set(self.dets)) != 3:
            raise ValueError("a triple row needs three distinct detections")
        object.__setattr__(self, "dets", tuple(sorted(self.dets)))

    @property
    def key(self) -> tuple:
        return (self.flavor.value,) + self.dets

    def covers(self, members: Iterable[int]) -> bool:
        """Membership predicate: the column holds at least two of the three."""
        return len(set(self.dets).intersection(members)) >= 2


def check_triple(instance: Instance, row: TripleRow) -> None:
    parts = {instance.part_of[d] for d in row.dets}
    if row.flavor is Flavor.GLOBAL and len(parts) != 3:
        raise ValueError(f"global triple {row.dets} must span three distinct parts")
    if row.flavor is Flavor.LOCAL and len(parts) != 1:
        raise ValueError(f"local triple {row.dets} must lie within one part")


@dataclass
class DualValues:
    lambda1: np.ndarray
    lambda2: np.ndarray
    lambda3: np.ndarray
    global_rows: list[TripleRow] = field(default_factory=list)
    lambda4: np.ndarray = field(default_factory=lambda: np.zeros(0))
    local_rows: list[TripleRow] = field(default_factory=list)
    lambda5: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @classmethod
    def zeros(cls, n: int) -> "DualValues":
        return cls(np.zeros(n), np.zeros(n), np.zeros(n))

    def objective(self) -> float:
        return -float(self.lambda1.sum() + self.lambda2.sum() + self.lambda4.sum() + self.lambda5.sum())

    def active_global(self, tol: float = 0.0) -> list[tuple[TripleRow, float]]:
        return [(r, float(v)) for r, v in zip(self.global_rows, self.lambda4) if v > tol]

    def active_local(self, tol: float = 0.0) -> list[tuple[TripleRow, float]]:
        return [(r, float(v)) for r, v in zip(self.local_rows, self.lambda5) if v > tol]


def reduced_cost_global(instance: Instance, column: GlobalPoseColumn, duals: DualValues) -> float:
    ids = column.detections
    rc = column.cost + float(sum(duals.lambda1[d] - duals.lambda3[d] for d in ids))
    for row, lam in zip(duals.global_rows, duals.lambda4):
        if row.covers(ids):
            rc += float(lam)
    return rc


def reduced_cost_local(instance: Instance, column: LocalAssignmentColumn, duals: DualValues) -> float:
    a = column.anchor
    rc = column.cost + float(duals.lambda2[a] + duals.lambda3[a])
    rc += float(sum(duals.lambda1[d] + duals.lambda2[d] for d in column.locals))
    members = column.members
    for row, lam in zip(duals.local_rows, duals.lambda5):
        if row.covers(members):
            rc += float(lam)
    return rc


def reduced_cost(instance: Instance, column: Column, duals: DualValues) -> float:
    if isinstance(column, GlobalPoseColumn):
        return reduced_cost_global(instance, column, duals)
    return reduced_cost_local(instance, column, duals)


class ColumnPool:
    """Generated columns with signature-based deduplication."""

    def __init__(self):
        self.globals: list[GlobalPoseColumn] = []
        self.locals: list[LocalAssignmentColumn] = []
        self._seen: set[tuple] = set()

    def __len__(self) -> int:
        return len(self.globals) + len(self.locals)

    def __contains__(self, column: Column) -> bool:
        return column.signature in self._seen

    def columns(self) -> list[Column]:
        return [*self.globals, *self.locals]

    def add(self, instance: Instance, column: Column) -> bool:
        """Add ``column``; True when added, False for a duplicate.

        Raises :class:`CostMismatch` when the cached cost disagrees with the
        cost recomputed from ``instance``.
        """
        if isinstance(column, GlobalPoseColumn):
            expect = compute_gamma(instance, column.detections)
        else:
            expect = compute_psi(instance, column.anchor, column.locals)
        if abs(expect - column.cost) > COST_TOL:
            raise CostMismatch(f"{column.signature}: cached {column.cost} != recomputed {expect}")
        if column.signature in self._seen:
            return False
        self._seen.add(column.signature)
        if isinstance(column, GlobalPoseColumn):
            self.globals.append(column)
        else:
            self.locals.append(column)
        return True

    def copy(self) -> "ColumnPool":
        out = ColumnPool()
        out.globals = list(self.globals)
        out.locals = list(self.locals)
        out._seen = set(self._seen)
        return out


@dataclass
class RestrictedLP:
    """Master LP plus the bookkeeping needed to read its solution back."""

    lp: DenseLP
    n_detections: int
    n_globals: int
    global_rows: list[TripleRow]
    local_rows: list[TripleRow]
    columns: list[Column]

    @property
    def row_keys(self) -> list[tuple]:
        n = self.n_detections
        keys = [(f, d) for f in (1, 2, 3) for d in range(n)]
        keys += [r.key for r in self.global_rows]
        keys += [r.key for r in self.local_rows]
        return keys

    @property
    def column_keys(self) -> list[tuple]:
        return [c.signature for c in self.columns]

    def unpack_duals(self, y: np.ndarray) -> DualValues:
        n = self.n_detections
        k = len(self.global_rows)
        y = np.maximum(np.asarray(y, dtype=float), 0.0)
        return DualValues(
            lambda1=y[:n].copy(),
            lambda2=y[n:2 * n].copy(),
            lambda3=y[2 * n:3 * n].copy(),
            global_rows=list(self.global_rows),
            lambda4=y[3 * n:3 * n + k].copy(),
            local_rows=list(self.local_rows),
            lambda5=y[3 * n + k:].copy(),
        )

    def split_primal(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return x[:self.n_globals], x[self.n_globals:]


def build_restricted_lp(instance: Instance, pool: ColumnPool,
                        triple_rows: Sequence[TripleRow] = ()) -> RestrictedLP:
    n = len(instance)
    grows = [r for r in triple_rows if r.flavor is Flavor.GLOBAL]
    lrows = [r for r in triple_rows if r.flavor is Flavor.LOCAL]
    cols: list[Column] = pool.columns()
    m = 3 * n + len(grows) + len(lrows)
    A = np.zeros((m, len(cols)))
    b = np.concatenate([np.ones(n), np.ones(n), np.zeros(n), np.ones(len(grows) + len(lrows))])
    c = np.array([col.cost for col in cols], dtype=float)
    base = 3 * n
    for j, col in enumerate(cols):
        if isinstance(col, GlobalPoseColumn):
            for d in col.detections:
                A[d, j] = 1.0
                A[2 * n + d, j] = -1.0
            for i, row in enumerate(grows):
                if row.covers(col.detections):
                    A[base + i, j] = 1.0
        else:
            for d in col.locals:
                A[d, j] = 1.0
                A[n + d, j] = 1.0
            A[n + col.anchor, j] = 1.0
            A[2 * n + col.anchor, j] = 1.0
            members = col.members
            for i, row in enumerate(lrows):
                if row.covers(members):
                    A[base + len(grows) + i, j] = 1.0
    assert np.all(b >= 0)
    return RestrictedLP(DenseLP(A, b, c), n, len(pool.globals), grows, lrows, cols)


def dump_master_csv(master: RestrictedLP, path) -> None:
    """Write the master as CSV: one line per row with its rhs and coefficients."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["row", "rhs"] + ["/".join(map(str, k)) for k in master.column_keys])
        w.writerow(["cost", ""] + [repr(float(v)) for v in master.lp.c])
        for key, rhs, coeffs in zip(master.row_keys, master.lp.b, master.lp.A):
            w.writerow(["/".join(map(str, key)), repr(float(rhs))] + [repr(float(v)) for v in coeffs])
