"""Pricing problems: find the most negative reduced-cost column per anchor.

Local assignments are priced by exhaustive enumeration over the anchor's
same-part companions (at most 14 of them). Global poses containing a
major-part anchor are priced by dynamic programming over the part graph
conditioned on the anchor, which is a forest; every non-anchor part gets an
extra zero-cost ABSENT label for occlusion. When global triple rows carry
positive multipliers the objective gains non-decomposable penalties and a
best-first branch-and-bound over detection fixings is used instead, with the
penalty-free DP as its bound.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .instance import Instance, conditional_cycle
from .master import (
    DualValues,
    GlobalPoseColumn,
    LocalAssignmentColumn,
    TripleRow,
    compute_gamma,
    compute_psi,
)

PRICING_TOL = 1e-8
TIE_TOL = 1e-12
BNB_NODE_LIMIT = 1_000_000
ABSENT = -1


class ConditionalGraphNotForest(ValueError):
    pass


class PricingNodeLimit(RuntimeError):
    pass


@dataclass(frozen=True)
class PricingResult:
    column: GlobalPoseColumn | LocalAssignmentColumn | None
    reduced_cost: float
    violated: bool


@lru_cache(maxsize=None)
def _subset_matrix(k: int) -> np.ndarray:
    """All nonempty subsets of ``range(k)`` as 0/1 rows, in binary counting order."""
    codes = np.arange(1, 1 << k, dtype=np.int64)
    return ((codes[:, None] >> np.arange(k)) & 1).astype(float)


class _Forest:
    """DP schedule for the part graph with one major part conditioned away."""

    def __init__(self, instance: Instance, major: str):
        g = instance.part_graph
        if conditional_cycle(g.parts, g.edges, major) is not None:
            raise ConditionalGraphNotForest(f"conditioning on {major!r} leaves a cycle")
        idx = g.index
        self.major = major
        self.parts = [p for p in g.parts if p != major]
        adj: dict[str, list[str]] = {p: [] for p in self.parts}
        for a, b in g.sorted_edges():
            if major in (a, b):
                continue
            adj[a].append(b)
            adj[b].append(a)
        self.order: list[str] = []
        self.parent: dict[str, str | None] = {}
        for root in self.parts:
            if root in self.parent:
                continue
            self.parent[root] = None
            queue = [root]
            while queue:
                p = queue.pop(0)
                self.order.append(p)
                for q in sorted(adj[p], key=idx.__getitem__):
                    if q not in self.parent:
                        self.parent[q] = p
                        queue.append(q)
        self.children = {p: [q for q in self.order if self.parent[q] == p] for p in self.parts}
        self.roots = [p for p in self.order if self.parent[p] is None]
        # label lists with ABSENT first, then ascending detection id
        self.labels = {p: (ABSENT,) + instance.by_part[p] for p in self.parts}
        self.edge_cost: dict[str, np.ndarray] = {}
        for q in self.order:
            p = self.parent[q]
            if p is None:
                continue
            lp, lq = self.labels[p], self.labels[q]
            E = np.zeros((len(lp), len(lq)))
            for i, a in enumerate(lp[1:], 1):
                for j, b in enumerate(lq[1:], 1):
                    E[i, j] = instance.phi(a, b)
            self.edge_cost[q] = E


class PricingContext:
    """Per-instance precomputation shared by all pricing calls."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.theta = np.asarray(instance.theta, dtype=float)
        self._forests: dict[str, _Forest] = {}
        self._local: dict[int, tuple] = {}

    def forest(self, major: str) -> _Forest:
        if major not in self._forests:
            self._forests[major] = _Forest(self.instance, major)
        return self._forests[major]

    def local_data(self, anchor: int):
        if anchor not in self._local:
            inst = self.instance
            cand = tuple(d for d in inst.by_part[inst.part_of[anchor]] if d != anchor)
            k = len(cand)
            P = np.zeros((k, k))
            for i, j in itertools.combinations(range(k), 2):
                P[i, j] = P[j, i] = inst.phi(cand[i], cand[j])
            lin = np.array([inst.phi(anchor, d) for d in cand])
            # dual-independent part of every subset's value
            X = _subset_matrix(k)
            fixed = X @ (self.theta[list(cand)] + lin) + 0.5 * ((X @ P) * X).sum(axis=1) if k else None
            self._local[anchor] = (cand, fixed)
        return self._local[anchor]


def _context(instance: Instance, ctx: PricingContext | None) -> PricingContext:
    return ctx if ctx is not None else PricingContext(instance)


# -- local assignments --------------------------------------------------

def price_local(instance: Instance, anchor: int, duals: DualValues,
                tol: float = PRICING_TOL, ctx: PricingContext | None = None) -> PricingResult:
    """Exact minimum reduced-cost local assignment anchored at ``anchor``."""
    ctx = _context(instance, ctx)
    cand, fixed = ctx.local_data(anchor)
    k = len(cand)
    if k == 0:
        return PricingResult(None, np.inf, False)
    X = _subset_matrix(k)
    idx = np.array(cand)
    vals = fixed + X @ (duals.lambda1[idx] + duals.lambda2[idx])
    vals += duals.lambda2[anchor] + duals.lambda3[anchor]
    pos = {d: i for i, d in enumerate(cand)}
    for row, lam in duals.active_local():
        if anchor not in row.dets and not any(d in pos for d in row.dets):
            continue
        cnt = np.zeros(len(X)) + (1.0 if anchor in row.dets else 0.0)
        for d in row.dets:
            if d in pos:
                cnt += X[:, pos[d]]
        vals += lam * (cnt >= 2)
    best = vals.min()
    ties = np.flatnonzero(vals <= best + TIE_TOL * (1.0 + abs(best)))
    subsets = [tuple(cand[i] for i in np.flatnonzero(X[s])) for s in ties]
    chosen = min(subsets)
    s = int(ties[subsets.index(chosen)])
    col = LocalAssignmentColumn(anchor, chosen, compute_psi(instance, anchor, chosen))
    rc = float(vals[s])
    return PricingResult(col, rc, rc < -tol)


# -- global poses -------------------------------------------------------

def _node_costs(ctx: PricingContext, forest: _Forest, anchor: int, duals: DualValues):
    inst = ctx.instance
    out = {}
    for p in forest.parts:
        labels = forest.labels[p]
        v = np.zeros(len(labels))
        for i, d in enumerate(labels[1:], 1):
            v[i] = ctx.theta[d] + duals.lambda1[d] - duals.lambda3[d] + inst.phi(anchor, d)
        out[p] = v
    return out


def _tree_dp(forest: _Forest, node: dict[str, np.ndarray]) -> tuple[float, list[int]]:
    """Min-sum DP over the conditional forest; returns (value, chosen detections)."""
    value: dict[str, np.ndarray] = {}
    back: dict[str, np.ndarray] = {}
    for p in reversed(forest.order):
        v = node[p].copy()
        for q in forest.children[p]:
            M = forest.edge_cost[q] + value[q][None, :]
            back[q] = np.argmin(M, axis=1)
            v += M[np.arange(len(v)), back[q]]
        value[p] = v
    total = 0.0
    pick: dict[str, int] = {}
    for p in forest.order:
        parent = forest.parent[p]
        if parent is None:
            i = int(np.argmin(value[p]))
            total += float(value[p][i])
        else:
            i = int(back[p][pick[parent]])
        pick[p] = i
    chosen = [forest.labels[p][i] for p, i in pick.items() if i != 0]
    return total, sorted(chosen)


def _anchor_term(ctx: PricingContext, anchor: int, duals: DualValues) -> float:
    return ctx.instance.omega + ctx.theta[anchor] + duals.lambda1[anchor] - duals.lambda3[anchor]


def _check_anchor(instance: Instance, anchor: int) -> str:
    part = instance.part_of[anchor]
    if part not in instance.part_graph.major_parts:
        raise ValueError(f"detection {anchor} ({part}) is not a major-part detection")
    return part


def price_global_dp(instance: Instance, anchor: int, duals: DualValues,
                    tol: float = PRICING_TOL, ctx: PricingContext | None = None) -> PricingResult:
    """Exact minimum reduced-cost global pose through ``anchor``, ignoring triple rows."""
    ctx = _context(instance, ctx)
    forest = ctx.forest(_check_anchor(instance, anchor))
    node = _node_costs(ctx, forest, anchor, duals)
    val, chosen = _tree_dp(forest, node)
    ids = tuple(sorted(chosen + [anchor]))
    rc = float(_anchor_term(ctx, anchor, duals) + val)
    col = GlobalPoseColumn(ids, compute_gamma(instance, ids))
    return PricingResult(col, rc, rc < -tol)


def price_global_bnb(instance: Instance, anchor: int, duals: DualValues,
                     tol: float = PRICING_TOL, ctx: PricingContext | None = None,
                     node_limit: int = BNB_NODE_LIMIT) -> PricingResult:
    """Exact minimum reduced-cost global pose including triple-row penalties.

    Best-first search over fixings ``x_d = 0`` / ``x_d = 1``. A node's bound
    is the DP optimum under its fixings plus the penalties its fixings already
    force; penalties are nonnegative, so this never overestimates.
    """
    ctx = _context(instance, ctx)
    major = _check_anchor(instance, anchor)
    forest = ctx.forest(major)
    part_of = instance.part_of
    base = _anchor_term(ctx, anchor, duals)
    node0 = _node_costs(ctx, forest, anchor, duals)

    rows: list[tuple[TripleRow, float]] = []
    for row, lam in duals.active_global():
        # detections of the anchor's part other than the anchor can never be in
        live = [d for d in row.dets if d == anchor or part_of[d] != major]
        if len(live) >= 2:
            rows.append((row, lam))
    if not rows:
        return price_global_dp(instance, anchor, duals, tol, ctx)
    rows.sort(key=lambda rl: (-rl[1], rl[0].dets))

    def state(forced: dict[str, int], removed: frozenset, d: int) -> int:
        """1 if d is surely in, 0 if surely out, -1 if undetermined."""
        if d == anchor:
            return 1
        p = part_of[d]
        if p == major or d in removed:
            return 0
        if p in forced:
            return 1 if forced[p] == d else 0
        return -1

    def evaluate(forced, removed):
        node = {}
        for p, v in node0.items():
            if p in forced:
                w = np.full(len(v), np.inf)
                i = forest.labels[p].index(forced[p])
                w[i] = v[i]
            else:
                w = v.copy()
                for i, d in enumerate(forest.labels[p][1:], 1):
                    if d in removed:
                        w[i] = np.inf
            node[p] = w
        val, chosen = _tree_dp(forest, node)
        certain = 0.0
        open_rows = []
        for row, lam in rows:
            st = [state(forced, removed, d) for d in row.dets]
            ins, und = st.count(1), st.count(-1)
            if ins >= 2:
                certain += lam
            elif ins + und >= 2:
                open_rows.append((row, lam))
        return base + val + certain, chosen, open_rows

    counter = itertools.count()
    best_val, best_ids = np.inf, None
    lb, chosen, open_rows = evaluate({}, frozenset())
    heap = [(lb, next(counter), {}, frozenset(), chosen, open_rows)]
    nodes = 0
    while heap:
        lb, _, forced, removed, chosen, open_rows = heapq.heappop(heap)
        if lb >= best_val:
            break
        nodes += 1
        if nodes > node_limit:
            raise PricingNodeLimit(f"global pricing at anchor {anchor} exceeded {node_limit} nodes")
        members = set(chosen) | {anchor}
        hit = [(row, lam) for row, lam in open_rows if row.covers(members)]
        true_val = lb + sum(lam for _, lam in hit)
        if true_val < best_val:
            best_val, best_ids = true_val, tuple(sorted(members))
        if not hit:
            continue
        row, _ = hit[0]
        d = min(x for x in row.dets if x in members and state(forced, removed, x) == -1)
        for child_forced, child_removed in (
            (forced, removed | {d}),
            ({**forced, part_of[d]: d}, removed),
        ):
            clb, cch, copen = evaluate(child_forced, child_removed)
            if clb < best_val and np.isfinite(clb):
                heapq.heappush(heap, (clb, next(counter), child_forced, child_removed, cch, copen))

    col = GlobalPoseColumn(best_ids, compute_gamma(instance, best_ids))
    return PricingResult(col, float(best_val), best_val < -tol)


def price_global(instance: Instance, anchor: int, duals: DualValues,
                 tol: float = PRICING_TOL, ctx: PricingContext | None = None) -> PricingResult:
    """Dispatch to the DP or, when global triple multipliers are active, to B&B."""
    if len(duals.active_global()):
        return price_global_bnb(instance, anchor, duals, tol, ctx)
    return price_global_dp(instance, anchor, duals, tol, ctx)


def price_all(instance: Instance, duals: DualValues, tol: float = PRICING_TOL,
              ctx: PricingContext | None = None, threads: int = 1):
    """Run every pricing problem; returns (local results, global results) in anchor order."""
    ctx = _context(instance, ctx)
    anchors = range(len(instance))
    majors = instance.major_detections
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        # fill the shared caches up front so workers only read them
        for a in anchors:
            ctx.local_data(a)
        for p in instance.part_graph.major_parts:
            ctx.forest(p)
        with ThreadPoolExecutor(threads) as ex:
            loc = list(ex.map(lambda a: price_local(instance, a, duals, tol, ctx), anchors))
            glob = list(ex.map(lambda a: price_global(instance, a, duals, tol, ctx), majors))
    else:
        loc = [price_local(instance, a, duals, tol, ctx) for a in anchors]
        glob = [price_global(instance, a, duals, tol, ctx) for a in majors]
    return loc, glob
