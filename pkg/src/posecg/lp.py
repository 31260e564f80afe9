"""Dense primal simplex for ``min c.x  s.t.  A x <= b, x >= 0``.

Revised simplex over the columns ``[A | I]`` (structural columns followed by
one slack per row) with an explicit basis inverse updated by rank-one eta
steps and refactored periodically. With ``b >= 0`` the slack basis is
feasible and the method starts there directly; rows with a negative
right-hand side are handled by a phase-1 on artificial variables, which the
restricted ILP branch-and-bound needs once columns are fixed to one.

Dual multipliers are returned with the sign convention ``y >= 0`` and
``c + A^T y >= 0`` so that the dual objective is ``-b.y``.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
REPORT_TOL = 1e-7
DEGENERATE_STREAK = 50
ZERO_TOL = 1e-11
PROGRESS_TOL = 1e-9
FEAS_TOL = 1e-9
PERTURB_LO, PERTURB_HI = 1e-7, 1e-6
MAX_PERTURB = 3
PERTURB_STREAK = 1
REINVERT_EVERY = 100


class LPStatus(enum.Enum):
    OPTIMAL = "optimal"
    UNBOUNDED = "unbounded"
    INFEASIBLE = "infeasible"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class DenseLP:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.A = np.asarray(self.A, dtype=float).reshape(len(self.b), len(self.c))
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))
                and np.all(np.isfinite(self.c))):
            raise ValueError("LP data must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


@dataclass
class LPSolution:
    x: np.ndarray
    y: np.ndarray
    objective: float
    status: LPStatus
    basis: list[int] | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


def dual_objective(lp: DenseLP, y: np.ndarray) -> float:
    return float(-lp.b @ y)


def duality_gap(lp: DenseLP, sol: LPSolution) -> float:
    """Absolute difference between primal and dual objectives."""
    return abs(float(lp.c @ sol.x) - dual_objective(lp, sol.y))


def complementary_slackness(lp: DenseLP, sol: LPSolution) -> float:
    """Largest violation of ``x_j * rc_j = 0`` and ``y_i * slack_i = 0``."""
    if lp.A.size == 0:
        return 0.0
    rc = lp.c + lp.A.T @ sol.y
    slack = lp.b - lp.A @ sol.x
    worst = 0.0
    if len(rc):
        worst = max(worst, float(np.max(np.abs(sol.x * rc))))
    if len(slack):
        worst = max(worst, float(np.max(np.abs(sol.y * slack))))
    return worst


def check_optimality(lp: DenseLP, sol: LPSolution, eps: float = REPORT_TOL) -> list[str]:
    """Return the list of failed optimality conditions (empty when certified)."""
    problems = []
    scale = 1.0 + abs(sol.objective)
    if np.any(sol.x < -eps):
        problems.append("primal x >= 0")
    if np.any(sol.y < -eps):
        problems.append("dual y >= 0")
    if lp.A.size and np.any(lp.A @ sol.x > lp.b + eps):
        problems.append("primal Ax <= b")
    if lp.A.size and np.any(lp.c + lp.A.T @ sol.y < -eps):
        problems.append("dual c + A^T y >= 0")
    if duality_gap(lp, sol) > eps * scale:
        problems.append("strong duality")
    if complementary_slackness(lp, sol) > eps:
        problems.append("complementary slackness")
    return problems


class _Basis:
    """Basis bookkeeping over columns [structural | slack | artificial]."""

    def __init__(self, A: np.ndarray, b: np.ndarray, art_rows: Sequence[int],
                 basis: Sequence[int], cost: np.ndarray):
        self.m, self.n = A.shape
        self.A = A
        self.As = sp.csc_matrix(A)
        self.AsT = self.As.T.tocsr()
        self._full = None
        self.b0 = np.array(b, dtype=float)
        self.b = self.b0.copy()
        self.art_rows = np.asarray(art_rows, dtype=int)
        self.cost = cost
        self.basis = list(basis)
        self.ok = self.refactor()

    @property
    def width(self) -> int:
        return self.n + self.m + len(self.art_rows)

    def column(self, j: int) -> np.ndarray:
        n, m = self.n, self.m
        if j < n:
            return self.A[:, j]
        e = np.zeros(m)
        if j < n + m:
            e[j - n] = 1.0
        else:
            e[self.art_rows[j - n - m]] = -1.0
        return e

    def sparse_basis(self) -> sp.csc_matrix:
        if self._full is None:
            k = len(self.art_rows)
            art = sp.csc_matrix((-np.ones(k), (self.art_rows, np.arange(k))), shape=(self.m, k))
            self._full = sp.hstack([self.As, sp.identity(self.m, format="csc"), art], format="csc")
        return self._full[:, self.basis]

    def refactor(self) -> bool:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", spla.MatrixRankWarning)
                lu = spla.splu(self.sparse_basis())
            self.Binv = lu.solve(np.eye(self.m))
        except (RuntimeError, spla.MatrixRankWarning):
            return False
        if not np.all(np.isfinite(self.Binv)):
            return False
        self.Binv[np.abs(self.Binv) < 1e-13] = 0.0
        self.xb = self.Binv @ self.b
        return True

    def entering_direction(self, j: int) -> np.ndarray:
        n, m = self.n, self.m
        if j < n:
            lo, hi = self.As.indptr[j], self.As.indptr[j + 1]
            rows = self.As.indices[lo:hi]
            return self.Binv[:, rows] @ self.As.data[lo:hi]
        if j < n + m:
            return self.Binv[:, j - n].copy()
        return -self.Binv[:, self.art_rows[j - n - m]]

    def row_alpha(self, r: int) -> np.ndarray:
        """Row ``r`` of ``B^-1`` times every column."""
        row = self.Binv[r]
        parts = [self.AsT @ row, row]
        if len(self.art_rows):
            parts.append(-row[self.art_rows])
        return np.concatenate(parts)

    def reduced_costs(self) -> np.ndarray:
        pi = self.cost[self.basis] @ self.Binv
        n, m = self.n, self.m
        rc = np.empty(self.width)
        rc[:n] = self.cost[:n] - self.AsT @ pi
        rc[n:n + m] = self.cost[n:n + m] - pi
        if len(self.art_rows):
            rc[n + m:] = self.cost[n + m:] + pi[self.art_rows]
        return rc

    def objective(self) -> float:
        return float(self.cost[self.basis] @ self.xb)

    def pivot(self, r: int, j: int, d: np.ndarray) -> None:
        piv = d[r]
        step = self.xb[r] / piv
        self.xb -= step * d
        self.xb[r] = step
        cols = np.flatnonzero(self.Binv[r])
        row = self.Binv[r, cols] / piv
        self.Binv[r, cols] = row
        dd = d.copy()
        dd[r] = 0.0
        nz = np.flatnonzero(np.abs(dd) > 1e-14)
        if len(nz) and len(cols):
            self.Binv[np.ix_(nz, cols)] -= np.outer(dd[nz], row)
        self.basis[r] = j


def _lex_row(B: _Basis, ties: np.ndarray, d: np.ndarray) -> int:
    """Lexicographic ratio test over rows of the basis inverse.

    Only columns on which the tied rows differ can decide the order, so the
    sort runs over those alone.
    """
    M = np.round(B.Binv[ties] / d[ties, None], 12)
    cols = np.flatnonzero(M.max(axis=0) > M.min(axis=0))
    if len(cols) == 0:
        return int(ties[0])
    order = np.lexsort(M[:, cols].T[::-1])
    return int(ties[order[0]])


def _perturb(B: _Basis, rng: np.random.Generator) -> bool:
    """Lift zero basic values by tiny random amounts, moving ``b`` to match."""
    zero = np.flatnonzero(B.xb <= ZERO_TOL)
    if len(zero) == 0:
        return False
    delta = np.zeros(B.m)
    delta[zero] = rng.uniform(PERTURB_LO, PERTURB_HI, len(zero))
    B.xb += delta
    B.b = B.b + B.sparse_basis() @ delta
    return True


def _dual_cleanup(B: _Basis, allowed: np.ndarray, max_iter: int, trace, it: int):
    """Dual simplex from a dual feasible basis until ``x_B >= 0``."""
    since_refactor = 0
    while True:
        r = int(np.argmin(B.xb))
        if B.xb[r] >= -FEAS_TOL:
            np.maximum(B.xb, 0.0, out=B.xb)
            return LPStatus.OPTIMAL, it
        if it >= max_iter:
            return LPStatus.ITERATION_LIMIT, it
        alpha = B.row_alpha(r)
        rc = np.maximum(B.reduced_costs(), 0.0)
        cand = allowed & (alpha < -PIVOT_TOL)
        cand[B.basis] = False
        cand = np.flatnonzero(cand)
        if len(cand) == 0:
            return LPStatus.INFEASIBLE, it
        ratios = rc[cand] / -alpha[cand]
        ties = cand[ratios <= ratios.min() + 1e-12]
        j = int(ties[np.argmin(alpha[ties])])
        if trace is not None:
            trace.write(f"iter {it}: dual enter {j} leave {B.basis[r]} row {r} "
                        f"obj {B.objective():.12g}\n")
        B.pivot(r, j, B.entering_direction(j))
        it += 1
        since_refactor += 1
        if since_refactor >= REINVERT_EVERY:
            since_refactor = 0
            B.refactor()


def _run_simplex(B: _Basis, allowed: np.ndarray, max_iter: int, trace, it0: int,
                 anti_cycling: str = "perturb"):
    """Primal simplex restricted to entering columns in ``allowed``.

    Entering columns follow Dantzig's rule and ratio-test ties go to the
    largest pivot. After a streak of pivots without measurable progress the
    ``anti_cycling`` rule takes over: ``"perturb"`` lifts the degenerate
    basic values by tiny random amounts (at most ``MAX_PERTURB`` times, then
    Bland), ``"bland"`` switches to Bland's rule, and ``"lex"`` uses the
    lexicographic ratio test throughout. A perturbation is removed once the
    perturbed problem is optimal and any infeasibility this leaves is
    repaired by dual simplex pivots. Returns (status, iterations).
    """
    it = it0
    streak = 0
    bland = False
    since_refactor = 0
    n_perturb = 0 if anti_cycling == "perturb" else MAX_PERTURB
    perturbed = False
    rng = np.random.default_rng(B.m * 7919 + B.n)
    while True:
        rc = np.where(allowed, B.reduced_costs(), 0.0)
        if bland:
            cand = np.flatnonzero(rc < -PIVOT_TOL)
            j = int(cand[0]) if len(cand) else -1
        else:
            j = int(np.argmin(rc))
            if rc[j] >= -PIVOT_TOL:
                j = -1
        if j < 0:
            if not perturbed:
                return LPStatus.OPTIMAL, it
            B.b = B.b0.copy()
            B.xb = B.Binv @ B.b
            perturbed = False
            n_perturb = MAX_PERTURB
            status, it = _dual_cleanup(B, allowed, max_iter, trace, it)
            if status is not LPStatus.OPTIMAL:
                return status, it
            streak, bland, since_refactor = 0, False, 0
            continue
        if it >= max_iter:
            return LPStatus.ITERATION_LIMIT, it
        d = B.entering_direction(j)
        rows = np.flatnonzero(d > PIVOT_TOL)
        if len(rows) == 0:
            return LPStatus.UNBOUNDED, it
        ratios = np.maximum(B.xb[rows], 0.0) / d[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12]
        if len(ties) == 1:
            r = int(ties[0])
        elif bland:
            r = int(min(ties, key=lambda i: B.basis[i]))
        elif anti_cycling == "lex":
            r = _lex_row(B, ties, d)
        else:
            r = int(ties[np.argmax(d[ties])])
        if trace is not None:
            trace.write(f"iter {it}: enter {j} leave {B.basis[r]} row {r} "
                        f"step {best:.6g} obj {B.objective():.12g}{' bland' if bland else ''}\n")
        B.pivot(r, j, d)
        B.xb[B.xb < ZERO_TOL] = 0.0
        it += 1
        since_refactor += 1
        # a pivot counts as progress only if the objective moves measurably
        if best * -rc[j] <= PROGRESS_TOL:
            streak += 1
            if anti_cycling == "perturb" and streak >= PERTURB_STREAK and n_perturb < MAX_PERTURB \
                    and _perturb(B, rng):
                n_perturb += 1
                perturbed = True
                streak = 0
            elif streak >= DEGENERATE_STREAK and anti_cycling != "lex":
                if n_perturb < MAX_PERTURB and _perturb(B, rng):
                    n_perturb += 1
                    perturbed = True
                    streak = 0
                else:
                    bland = True
        else:
            streak = 0
            bland = False
        if since_refactor >= REINVERT_EVERY:
            since_refactor = 0
            B.refactor()
            np.maximum(B.xb, 0.0, out=B.xb)


def solve_lp(lp: DenseLP, eps: float = PIVOT_TOL, *, max_iter: int = 50_000,
             basis: Sequence[int] | None = None, trace: TextIO | None = None,
             anti_cycling: str = "perturb") -> LPSolution:
    """Solve ``lp`` to optimality.

    ``basis`` optionally warm-starts from a list of ``m`` column indices in the
    ``[structural | slack]`` numbering; it is ignored when singular or primal
    infeasible. ``trace`` receives one line per pivot. ``anti_cycling`` is
    ``"perturb"`` (bounded perturbation, then Bland), ``"bland"`` (Bland's
    rule after a degenerate streak) or ``"lex"`` (lexicographic ratio test).
    """
    if anti_cycling not in ("perturb", "lex", "bland"):
        raise ValueError(f"unknown anti-cycling rule {anti_cycling!r}")
    m, n = lp.shape
    if n == 0:
        if np.any(lp.b < -eps):
            return LPSolution(np.zeros(0), np.zeros(m), 0.0, LPStatus.INFEASIBLE)
        return LPSolution(np.zeros(0), np.zeros(m), 0.0, LPStatus.OPTIMAL, basis=list(range(m)))
    if m == 0:
        if np.any(lp.c < -eps):
            return LPSolution(np.zeros(n), np.zeros(0), -np.inf, LPStatus.UNBOUNDED)
        return LPSolution(np.zeros(n), np.zeros(0), 0.0, LPStatus.OPTIMAL, basis=[])

    cost = np.concatenate([lp.c, np.zeros(m)])
    B = None
    if basis is not None and len(basis) == m and len(set(basis)) == m and max(basis) < n + m:
        B = _Basis(lp.A, lp.b, [], basis, cost)
        if not B.ok or np.any(B.xb < -1e-9):
            logger.debug("warm start basis rejected")
            B = None
        else:
            np.maximum(B.xb, 0.0, out=B.xb)

    it = 0
    if B is None:
        neg = [i for i in range(m) if lp.b[i] < 0]
        if not neg:
            B = _Basis(lp.A, lp.b, [], list(range(n, n + m)), cost)
        else:
            art = {i: k for k, i in enumerate(neg)}
            start = [n + m + art[i] if i in art else n + i for i in range(m)]
            phase1 = np.zeros(n + m + len(neg))
            phase1[n + m:] = 1.0
            B = _Basis(lp.A, lp.b, neg, start, phase1)
            status, it = _run_simplex(B, np.ones(B.width, dtype=bool), max_iter, trace, 0, anti_cycling)
            if status is LPStatus.ITERATION_LIMIT:
                return _finish(lp, B, status, it)
            if B.objective() > 1e-7:
                return LPSolution(np.zeros(n), np.zeros(m), np.inf, LPStatus.INFEASIBLE, iterations=it)
            _drive_out_artificials(B)
            B.cost = np.concatenate([cost, np.zeros(len(neg))])

    allowed = np.zeros(B.width, dtype=bool)
    allowed[:n + m] = True
    status, it = _run_simplex(B, allowed, max_iter, trace, it, anti_cycling)
    return _finish(lp, B, status, it)


def _drive_out_artificials(B: _Basis) -> None:
    n_real = B.n + B.m
    for r, j in enumerate(list(B.basis)):
        if j < n_real:
            continue
        # row r of B^-1 [A I] tells which real columns can replace the artificial
        row = np.concatenate([B.AsT @ B.Binv[r], B.Binv[r]])
        cand = np.flatnonzero(np.abs(row) > 1e-7)
        if len(cand):
            k = int(cand[0])
            B.pivot(r, k, B.entering_direction(k))
        # otherwise the row is redundant; the artificial stays basic at zero


def _finish(lp: DenseLP, B: _Basis, status: LPStatus, it: int) -> LPSolution:
    m, n = lp.shape
    if status is LPStatus.UNBOUNDED:
        return LPSolution(np.zeros(n), np.zeros(m), -np.inf, status, iterations=it)
    cb = np.concatenate([lp.c, np.zeros(B.width - n)])[B.basis]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            lu = spla.splu(B.sparse_basis())
        xb = lu.solve(lp.b.astype(float))
        pi = lu.solve(cb.astype(float), trans="T")
    except (RuntimeError, spla.MatrixRankWarning):
        xb = B.xb
        pi = cb @ B.Binv
    full_x = np.zeros(B.width)
    full_x[B.basis] = xb
    x = full_x[:n]
    y = -pi
    x[np.abs(x) < 1e-12] = 0.0
    y[np.abs(y) < 1e-12] = 0.0
    obj = float(lp.c @ x)
    basis = list(B.basis) if max(B.basis) < n + m else None
    return LPSolution(x, y, obj, status, basis=basis, iterations=it)
