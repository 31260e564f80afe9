"""Brute-force references for tiny instances.

Nothing here calls into the pricing or solver modules; costs, reduced costs
and validity are recomputed from the raw instance so the checks stay
independent of the code they check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .instance import Instance

MAX_ENUM = 14
MAX_BRUTE = 8


class TooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OracleColumn:
    """A column of the full universe: ``anchor`` is None for global poses."""

    members: tuple[int, ...]
    cost: float
    anchor: int | None = None

    @property
    def is_global(self) -> bool:
        return self.anchor is None

    @property
    def locals(self) -> tuple[int, ...]:
        return tuple(d for d in self.members if d != self.anchor)


@dataclass
class OracleSolution:
    objective: float
    globals: list[OracleColumn]
    locals: list[OracleColumn]

    def families(self) -> frozenset:
        """Selected columns as a set of (kind, members) keys."""
        out = {("G", c.members) for c in self.globals}
        out |= {("L", c.anchor, c.members) for c in self.locals}
        return frozenset(out)


def _pairs(instance: Instance, ids) -> float:
    return sum(instance.pairwise.get((a, b), 0.0) for a, b in itertools.combinations(sorted(ids), 2))


def pose_cost(instance: Instance, ids) -> float:
    return instance.omega + sum(instance.detections[d].theta for d in ids) + _pairs(instance, ids)


def local_cost(instance: Instance, anchor: int, locals_) -> float:
    return sum(instance.detections[d].theta for d in locals_) + _pairs(instance, set(locals_) | {anchor})


def _all_poses(instance: Instance, must: int | None = None):
    """Every valid global pose, optionally restricted to those containing ``must``."""
    parts = instance.parts
    major = instance.part_graph.major_parts
    choices = []
    for p in parts:
        dets = [d.id for d in instance.detections if d.part == p]
        if must is not None and instance.detections[must].part == p:
            choices.append([must])
        else:
            choices.append([None] + dets)
    for combo in itertools.product(*choices):
        ids = tuple(sorted(d for d in combo if d is not None))
        if ids and any(instance.detections[d].part in major for d in ids):
            yield ids


def _all_locals(instance: Instance, anchor: int):
    part = instance.detections[anchor].part
    others = [d.id for d in instance.detections if d.part == part and d.id != anchor]
    for k in range(1, len(others) + 1):
        yield from itertools.combinations(others, k)


def enumerate_all_columns(instance: Instance) -> tuple[list[OracleColumn], list[OracleColumn]]:
    """The full column universe: every valid global pose and nonempty local assignment."""
    if len(instance) > MAX_ENUM:
        raise TooLarge(f"{len(instance)} detections exceeds the enumeration guard of {MAX_ENUM}")
    globals_ = [OracleColumn(ids, pose_cost(instance, ids)) for ids in _all_poses(instance)]
    locals_ = []
    for a in range(len(instance)):
        for L in _all_locals(instance, a):
            locals_.append(OracleColumn(tuple(sorted(L + (a,))), local_cost(instance, a, L), a))
    return globals_, locals_


def full_lp(instance: Instance, engine: str = "simplex"):
    """LP relaxation over the full column universe.

    ``engine`` is ``"simplex"`` (the package's own LP code on a matrix built
    here from scratch) or ``"highs"`` (scipy's HiGHS, fully independent).
    Returns (objective, globals, locals, x).
    """
    G, L = enumerate_all_columns(instance)
    n = len(instance)
    cols = G + L
    if not cols:
        return 0.0, G, L, np.zeros(0)
    A = np.zeros((3 * n, len(cols)))
    for j, c in enumerate(cols):
        if c.is_global:
            for d in c.members:
                A[d, j] += 1
                A[2 * n + d, j] -= 1
        else:
            for d in c.locals:
                A[d, j] += 1
                A[n + d, j] += 1
            A[n + c.anchor, j] += 1
            A[2 * n + c.anchor, j] += 1
    b = np.r_[np.ones(2 * n), np.zeros(n)]
    c = np.array([col.cost for col in cols])
    if engine == "highs":
        from scipy.optimize import linprog

        res = linprog(c, A_ub=A, b_ub=b, bounds=(0, None), method="highs")
        if res.status != 0:
            raise RuntimeError(f"oracle LP failed: {res.message}")
        return float(res.fun), G, L, res.x
    if engine != "simplex":
        raise ValueError(f"unknown LP engine {engine!r}")
    from .lp import DenseLP, solve_lp

    sol = solve_lp(DenseLP(A, b, c))
    if not sol.optimal:
        raise RuntimeError(f"oracle LP failed: {sol.status.value}")
    return sol.objective, G, L, sol.x


def brute_force_solve(instance: Instance, limit: int = MAX_BRUTE) -> OracleSolution:
    """Exact optimum of the full ILP by exhaustive search."""
    n = len(instance)
    if n > limit:
        raise TooLarge(f"{n} detections exceeds the brute-force guard of {limit}")
    G, _ = enumerate_all_columns(instance)
    poses_with = {d: [q for q in G if q.members[0] == d] for d in range(n)}

    @lru_cache(maxsize=None)
    def best_locals(glob: frozenset, free: frozenset) -> tuple[float, tuple]:
        # anchors come from glob, local members from free; each used once
        anchors = sorted(glob)
        if not anchors:
            return 0.0, ()
        a, rest = anchors[0], frozenset(anchors[1:])
        best = best_locals(rest, free)
        part = instance.detections[a].part
        pool = [d for d in free if instance.detections[d].part == part]
        for k in range(1, len(pool) + 1):
            for L in itertools.combinations(sorted(pool), k):
                sub = best_locals(rest, free - set(L))
                val = local_cost(instance, a, L) + sub[0]
                if val < best[0]:
                    best = (val, ((a, L),) + sub[1])
        return best

    best = [np.inf, None]

    def recurse(d: int, taken: frozenset, chosen: list, cost: float):
        if d == n:
            free = frozenset(range(n)) - taken
            lv, locs = best_locals(taken, free)
            if cost + lv < best[0]:
                best[0], best[1] = cost + lv, (list(chosen), locs)
            return
        if d in taken:
            recurse(d + 1, taken, chosen, cost)
            return
        recurse(d + 1, taken, chosen, cost)
        for q in poses_with[d]:
            if taken.isdisjoint(q.members):
                chosen.append(q)
                recurse(d + 1, taken | set(q.members), chosen, cost + q.cost)
                chosen.pop()

    recurse(0, frozenset(), [], 0.0)
    globs, locs = best[1]
    local_cols = [OracleColumn(tuple(sorted(L + (a,))), local_cost(instance, a, L), a) for a, L in locs]
    return OracleSolution(float(best[0]), sorted(globs, key=lambda c: c.members), local_cols)


def all_optimal_solutions(instance: Instance, tol: float = 1e-9, limit: int = MAX_BRUTE):
    """Objective and every optimal selection (as column-key families) by exhaustive search."""
    n = len(instance)
    if n > limit:
        raise TooLarge(f"{n} detections exceeds the brute-force guard of {limit}")
    G, L = enumerate_all_columns(instance)
    results: list[tuple[float, frozenset, int]] = []

    def locals_rec(anchors, free, acc, cost, glob_keys, n_poses):
        if not anchors:
            results.append((cost, frozenset(glob_keys | set(acc)), n_poses))
            return
        a, rest = anchors[0], anchors[1:]
        locals_rec(rest, free, acc, cost, glob_keys, n_poses)
        for col in L:
            if col.anchor == a and set(col.locals) <= free:
                locals_rec(rest, free - set(col.locals), acc + [("L", a, col.members)],
                           cost + col.cost, glob_keys, n_poses)

    def recurse(d, taken, keys, cost, n_poses):
        if d == n:
            locals_rec(sorted(taken), set(range(n)) - taken, [], cost, keys, n_poses)
            return
        recurse(d + 1, taken, keys, cost, n_poses)
        if d in taken:
            return
        for q in G:
            if q.members[0] == d and taken.isdisjoint(q.members):
                recurse(d + 1, taken | set(q.members), keys | {("G", q.members)}, cost + q.cost, n_poses + 1)

    recurse(0, set(), set(), 0.0, 0)
    best = min(r[0] for r in results)
    opt = [r for r in results if r[0] <= best + tol * (1 + abs(best))]
    return best, [r[1] for r in opt], [r[2] for r in opt]


def brute_force_price(instance: Instance, anchor: int, duals, kind: str):
    """Exhaustive minimum reduced cost; returns (value, member tuple or None).

    ``kind`` is ``"global"`` (penalties from global triple rows included) or
    ``"local"``. Duals are read through their plain attributes only.
    """
    if len(instance) > MAX_ENUM:
        raise TooLarge(f"{len(instance)} detections exceeds the enumeration guard of {MAX_ENUM}")
    l1, l2, l3 = (np.asarray(v, dtype=float) for v in (duals.lambda1, duals.lambda2, duals.lambda3))
    best, arg = np.inf, None
    if kind == "global":
        trip = [(set(r.dets), float(v)) for r, v in zip(duals.global_rows, duals.lambda4)]
        for ids in _all_poses(instance, must=anchor):
            val = pose_cost(instance, ids) + sum(l1[d] - l3[d] for d in ids)
            val += sum(v for c, v in trip if len(c & set(ids)) >= 2)
            if val < best:
                best, arg = val, ids
    elif kind == "local":
        trip = [(set(r.dets), float(v)) for r, v in zip(duals.local_rows, duals.lambda5)]
        for L in _all_locals(instance, anchor):
            body = set(L) | {anchor}
            val = local_cost(instance, anchor, L) + l2[anchor] + l3[anchor]
            val += sum(l1[d] + l2[d] for d in L)
            val += sum(v for c, v in trip if len(c & body) >= 2)
            if val < best:
                best, arg = val, tuple(sorted(body))
    else:
        raise ValueError(f"unknown pricing kind {kind!r}")
    return float(best), arg


def check_solution(instance: Instance, solution) -> list[str]:
    """Validity problems of a solution (empty when valid).

    ``solution`` needs ``poses`` (each with ``column.detections`` and
    ``locals`` carrying ``anchor``/``locals``), ``false_positives`` and
    ``objective``.
    """
    problems = []
    n = len(instance)
    part_of = [d.part for d in instance.detections]
    major = instance.part_graph.major_parts
    global_use = [0] * n
    local_use = [0] * n
    total = 0.0
    for pose in solution.poses:
        ids = list(pose.column.detections)
        parts = [part_of[d] for d in ids]
        if len(set(parts)) != len(parts):
            problems.append(f"pose {ids} has two detections of one part")
        if not any(p in major for p in parts):
            problems.append(f"pose {ids} has no major part")
        for d in ids:
            global_use[d] += 1
        total += pose_cost(instance, ids)
        for loc in pose.locals:
            body = list(loc.locals) + [loc.anchor]
            if not loc.locals:
                problems.append(f"local assignment at {loc.anchor} is empty")
            if loc.anchor not in ids:
                problems.append(f"local assignment anchor {loc.anchor} not in its pose {ids}")
            if any(part_of[d] != part_of[loc.anchor] for d in loc.locals):
                problems.append(f"local assignment at {loc.anchor} mixes parts")
            for d in body:
                local_use[d] += 1
            total += local_cost(instance, loc.anchor, loc.locals)
    local_members = set()
    for pose in solution.poses:
        for loc in pose.locals:
            local_members.update(loc.locals)
    for d in range(n):
        if global_use[d] > 1:
            problems.append(f"detection {d} is global in {global_use[d]} poses")
        if local_use[d] > 1:
            problems.append(f"detection {d} is in {local_use[d]} local assignments")
        if global_use[d] and d in local_members:
            problems.append(f"detection {d} is both global and local")
    used = {d for d in range(n) if global_use[d] or local_use[d]}
    fps = set(solution.false_positives)
    if fps != set(range(n)) - used:
        problems.append("false positives do not match the unused detections")
    if abs(total - solution.objective) > 1e-6 * (1 + abs(total)):
        problems.append(f"objective {solution.objective} != recomputed {total}")
    return problems
