"""Column generation, column/row generation and the final ILP over generated columns."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .instance import Instance
from .lp import DenseLP, LPSolution, LPStatus, solve_lp
from .master import (
    ColumnPool,
    DualValues,
    Flavor,
    GlobalPoseColumn,
    LocalAssignmentColumn,
    RestrictedLP,
    TripleRow,
    build_restricted_lp,
)
from .pricing import PRICING_TOL, PricingContext, price_all
from .rowgen import SEPARATION_TOL, TOP_K, separate_triples_global, separate_triples_local

logger = logging.getLogger(__name__)

FRACTIONAL_TOL = 1e-6


class IterationCapReached(RuntimeError):
    """Generation stopped at the iteration cap; ``result`` holds the best-so-far state."""

    def __init__(self, msg, result):
        super().__init__(msg)
        self.result = result


class LPFailure(RuntimeError):
    pass


@dataclass
class SolverConfig:
    max_iterations: int = 200
    tol: float = PRICING_TOL
    enable_triples: bool = True
    max_bnb_nodes: int = 100_000
    threads: int = 1
    lp_eps: float = 1e-9
    top_k: int = TOP_K
    separation_tol: float = SEPARATION_TOL
    full_separation: bool = False
    # called with (DenseLP, LPSolution) after every master or B&B LP solve
    lp_observer: Callable[[DenseLP, LPSolution], None] | None = field(default=None, repr=False)


@dataclass
class GenerationResult:
    duals: DualValues
    pool: ColumnPool
    rows: list[TripleRow]
    lp_objective: float
    lp_solution: LPSolution
    master: RestrictedLP
    iterations: int
    history: list[float] = field(default_factory=list)


@dataclass
class Pose:
    column: GlobalPoseColumn
    locals: list[LocalAssignmentColumn] = field(default_factory=list)


@dataclass
class Solution:
    poses: list[Pose]
    false_positives: tuple[int, ...]
    objective: float

    @property
    def columns(self):
        for p in self.poses:
            yield p.column
            yield from p.locals

    def to_dict(self, instance: Instance) -> dict:
        part_of = instance.part_of
        poses = []
        for p in self.poses:
            poses.append({
                "global": {part_of[d]: d for d in p.column.detections},
                "locals": [{"anchor": l.anchor, "locals": list(l.locals)} for l in p.locals],
            })
        return {
            "objective": self.objective,
            "poses": poses,
            "false_positives": list(self.false_positives),
        }


@dataclass
class SolveReport:
    lp_objective: float = 0.0
    ilp_objective: float = 0.0
    n_columns_global: int = 0
    n_columns_local: int = 0
    n_triple_rows: int = 0
    n_iterations: int = 0
    lp_integral: bool = True
    bnb_nodes: int = 0
    certified: bool = True
    capped: bool = False
    wall_time: float = 0.0

    @property
    def n_columns(self) -> int:
        return self.n_columns_global + self.n_columns_local

    def to_dict(self, timing: bool = False) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("wall_time")
        return d

    def summary(self) -> str:
        return (f"objective={self.ilp_objective:.10g} columns={self.n_columns_global}+{self.n_columns_local} "
                f"rows={self.n_triple_rows} iters={self.n_iterations} "
                f"integral={str(self.lp_integral).lower()} time={self.wall_time:.3f}")


def is_fractional(x: np.ndarray, tol: float = FRACTIONAL_TOL) -> bool:
    return bool(np.any((x > tol) & (x < 1.0 - tol)))


class _Master:
    """Restricted master with warm-started LP solves keyed by row/column identity."""

    def __init__(self, instance: Instance, config: SolverConfig):
        self.instance = instance
        self.config = config
        self._basis_keys: list[tuple] | None = None
        self._prev_rows: set[tuple] = set()

    def solve(self, pool: ColumnPool, rows: list[TripleRow]) -> tuple[RestrictedLP, LPSolution]:
        master = build_restricted_lp(self.instance, pool, rows)
        lp = master.lp
        basis = None
        if self._basis_keys is not None:
            index = {("c",) + k: j for j, k in enumerate(master.column_keys)}
            n = len(master.columns)
            index.update({("s",) + k: n + i for i, k in enumerate(master.row_keys)})
            try:
                basis = [index[k] for k in self._basis_keys]
            except KeyError:
                basis = None
            if basis is not None:
                # rows added since the last solve enter with their slacks basic
                basis += [n + i for i, k in enumerate(master.row_keys) if k not in self._prev_rows]
                if len(basis) != lp.shape[0]:
                    basis = None
        sol = solve_lp(lp, self.config.lp_eps, basis=basis)
        if self.config.lp_observer is not None:
            self.config.lp_observer(lp, sol)
        if not sol.optimal:
            raise LPFailure(f"restricted master LP ended with status {sol.status.value}")
        if sol.basis is not None:
            n = len(master.columns)
            keys = master.column_keys
            rkeys = master.row_keys
            self._basis_keys = [("c",) + keys[j] if j < n else ("s",) + rkeys[j - n] for j in sol.basis]
            self._prev_rows = set(rkeys)
        return master, sol


def _add_columns(instance, pool, results) -> int:
    added = 0
    for r in results:
        if r.violated and r.column is not None and pool.add(instance, r.column):
            added += 1
    return added


def run_column_generation(instance: Instance, config: SolverConfig | None = None,
                          pool: ColumnPool | None = None) -> GenerationResult:
    """Price local assignments and global poses until no column has negative reduced cost."""
    config = config or SolverConfig()
    pool = pool if pool is not None else ColumnPool()
    ctx = PricingContext(instance)
    master = _Master(instance, config)
    history = []
    for it in range(1, config.max_iterations + 1):
        rlp, sol = master.solve(pool, [])
        history.append(sol.objective)
        duals = rlp.unpack_duals(sol.y)
        loc, glob = price_all(instance, duals, config.tol, ctx, config.threads)
        added = _add_columns(instance, pool, loc) + _add_columns(instance, pool, glob)
        logger.debug("colgen iter %d: lp=%.10g added=%d pool=%d", it, sol.objective, added, len(pool))
        if added == 0:
            return GenerationResult(duals, pool, [], sol.objective, sol, rlp, it, history)
    rlp, sol = master.solve(pool, [])
    res = GenerationResult(rlp.unpack_duals(sol.y), pool, [], sol.objective, sol, rlp,
                           config.max_iterations, history)
    raise IterationCapReached(f"column generation hit {config.max_iterations} iterations", res)


def run_column_row_generation(instance: Instance, config: SolverConfig | None = None,
                              pool: ColumnPool | None = None,
                              rows: list[TripleRow] | None = None) -> GenerationResult:
    """Interleave pricing and odd-set separation until neither adds anything.

    Starts from an empty pool unless ``pool`` is given (for instance the pool a
    previous column generation run left behind).
    """
    config = config or SolverConfig()
    pool = pool if pool is not None else ColumnPool()
    rows = list(rows or [])
    ctx = PricingContext(instance)
    master = _Master(instance, config)
    history = []
    for it in range(1, config.max_iterations + 1):
        rlp, sol = master.solve(pool, rows)
        history.append(sol.objective)
        duals = rlp.unpack_duals(sol.y)
        loc, glob = price_all(instance, duals, config.tol, ctx, config.threads)
        added = _add_columns(instance, pool, loc) + _add_columns(instance, pool, glob)
        gamma, psi = rlp.split_primal(sol.x)
        kw = dict(tol=config.separation_tol, top_k=config.top_k, existing=rows,
                  full=config.full_separation)
        new_rows = separate_triples_global(instance, pool_view(rlp), gamma, **kw)
        new_rows += separate_triples_local(instance, pool_view(rlp), psi, **kw)
        rows.extend(new_rows)
        logger.debug("col/row iter %d: lp=%.10g cols+=%d rows+=%d", it, sol.objective, added, len(new_rows))
        if added == 0 and not new_rows:
            return GenerationResult(duals, pool, rows, sol.objective, sol, rlp, it, history)
    rlp, sol = master.solve(pool, rows)
    res = GenerationResult(rlp.unpack_duals(sol.y), pool, rows, sol.objective, sol, rlp,
                           config.max_iterations, history)
    raise IterationCapReached(f"column/row generation hit {config.max_iterations} iterations", res)


def pool_view(rlp: RestrictedLP) -> ColumnPool:
    """Pool whose column order matches the primal vector of ``rlp``."""
    view = ColumnPool()
    view.globals = [c for c in rlp.columns if isinstance(c, GlobalPoseColumn)]
    view.locals = [c for c in rlp.columns if isinstance(c, LocalAssignmentColumn)]
    return view


def solution_from_dict(instance: Instance, data: dict) -> Solution:
    """Rebuild a Solution from its file form, recomputing every cost.

    Raises InvalidPose or InvalidLocalAssignment on structurally bad entries;
    cross-column validity is left to the independent checker.
    """
    poses = []
    for entry in data.get("poses", []):
        col = GlobalPoseColumn.build(instance, [int(d) for d in entry["global"].values()])
        locs = [LocalAssignmentColumn.build(instance, int(l["anchor"]), [int(d) for d in l["locals"]])
                for l in entry.get("locals", [])]
        poses.append(Pose(col, locs))
    fps = tuple(int(d) for d in data.get("false_positives", []))
    objective = float(sum(c.cost for p in poses for c in [p.column, *p.locals]))
    return Solution(poses, fps, objective)


def _extract(instance: Instance, columns, x: np.ndarray) -> Solution:
    chosen = [c for c, v in zip(columns, x) if v > 0.5]
    poses = [Pose(c) for c in chosen if isinstance(c, GlobalPoseColumn)]
    poses.sort(key=lambda p: p.column.detections)
    owner = {d: p for p in poses for d in p.column.detections}
    for c in chosen:
        if isinstance(c, LocalAssignmentColumn):
            owner[c.anchor].locals.append(c)
    for p in poses:
        p.locals.sort(key=lambda l: l.anchor)
    used = set()
    for c in chosen:
        used.update(c.members)
    fps = tuple(d for d in range(len(instance)) if d not in used)
    objective = float(sum(c.cost for c in chosen))
    return Solution(poses, fps, objective)


def solve_ilp_over_columns(instance: Instance, master: RestrictedLP, lp_solution: LPSolution,
                           config: SolverConfig | None = None) -> tuple[Solution, SolveReport]:
    """Exact optimum over the generated columns and rows by depth-first branch-and-bound.

    Branches on the most fractional column, exploring the ``x = 1`` child
    first. The report's ``certified`` flag is False when the node cap stops
    the search early.
    """
    config = config or SolverConfig()
    lp = master.lp
    n = lp.shape[1]
    report = SolveReport(lp_objective=lp_solution.objective, n_triple_rows=len(master.global_rows) + len(master.local_rows))
    x0 = lp_solution.x
    if not is_fractional(x0):
        report.lp_integral = True
        x = np.round(x0)
        sol = _extract(instance, master.columns, x)
        report.ilp_objective = sol.objective
        return sol, report

    report.lp_integral = False
    # selecting nothing is always feasible and costs zero
    best_val = 0.0
    best_x = np.zeros(n)
    nodes = 0
    certified = True
    # stack of (fixed-to-one set, fixed-to-zero set, parent LP solution)
    stack: list[tuple[frozenset, frozenset, np.ndarray, float]] = [(frozenset(), frozenset(), x0, lp_solution.objective)]
    first = True
    while stack:
        ones, zeros, x, bound = stack.pop()
        if not first:
            nodes += 1
            if nodes > config.max_bnb_nodes:
                certified = False
                break
            free = [j for j in range(n) if j not in ones and j not in zeros]
            b = lp.b - lp.A[:, sorted(ones)].sum(axis=1)
            sub = DenseLP(lp.A[:, free], b, lp.c[free])
            s = solve_lp(sub, config.lp_eps)
            if config.lp_observer is not None:
                config.lp_observer(sub, s)
            if s.status is LPStatus.INFEASIBLE:
                continue
            if not s.optimal:
                raise LPFailure(f"branch-and-bound LP ended with status {s.status.value}")
            x = np.zeros(n)
            x[sorted(ones)] = 1.0
            x[free] = s.x
            bound = s.objective + float(lp.c[sorted(ones)].sum())
        first = False
        if bound >= best_val - 1e-9:
            continue
        frac = (x > FRACTIONAL_TOL) & (x < 1.0 - FRACTIONAL_TOL)
        if not frac.any():
            best_val, best_x = bound, np.round(x)
            continue
        dist = np.where(frac, np.abs(x - 0.5), np.inf)
        j = int(np.argmin(dist))
        # pushed last is explored first
        stack.append((ones, zeros | {j}, x, bound))
        stack.append((ones | {j}, zeros, x, bound))

    report.bnb_nodes = nodes
    report.certified = certified
    sol = _extract(instance, master.columns, best_x)
    report.ilp_objective = sol.objective
    return sol, report


def solve(instance: Instance, config: SolverConfig | None = None) -> tuple[Solution, SolveReport]:
    """Full pipeline: column generation, optional row generation, then the restricted ILP."""
    config = config or SolverConfig()
    t0 = time.perf_counter()
    capped = False
    try:
        res = run_column_generation(instance, config)
    except IterationCapReached as exc:
        res, capped = exc.result, True
    iterations = res.iterations
    if config.enable_triples and not capped and is_fractional(res.lp_solution.x):
        try:
            res2 = run_column_row_generation(instance, config, pool=res.pool)
        except IterationCapReached as exc:
            res2, capped = exc.result, True
        iterations += res2.iterations
        res = res2
    sol, report = solve_ilp_over_columns(instance, res.master, res.lp_solution, config)
    report.lp_objective = res.lp_objective
    report.n_columns_global = len(res.pool.globals)
    report.n_columns_local = len(res.pool.locals)
    report.n_triple_rows = len(res.rows)
    report.n_iterations = iterations
    report.capped = capped
    report.wall_time = time.perf_counter() - t0
    return sol, report
