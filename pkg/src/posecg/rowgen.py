"""Separation of order-three odd-set inequalities.

For a triple ``c`` of detections, at most one selected column may contain two
or more members of ``c``. Given a fractional master solution the separators
below return triples whose left-hand side exceeds one.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .instance import Instance
from .master import ColumnPool, Flavor, TripleRow

SEPARATION_TOL = 1e-6
TOP_K = 20


def _violations(members: list[tuple[int, ...]], weights: np.ndarray, triples: np.ndarray,
                n: int) -> np.ndarray:
    """Left-hand side ``sum_l w_l [|c & members_l| >= 2]`` for each triple row of ``triples``."""
    if len(triples) == 0 or len(members) == 0:
        return np.zeros(len(triples))
    inc = np.zeros((len(members), n))
    for j, mem in enumerate(members):
        inc[j, list(mem)] = 1.0
    counts = inc[:, triples[:, 0]] + inc[:, triples[:, 1]] + inc[:, triples[:, 2]]
    return weights @ (counts >= 2)


def _select(triples: np.ndarray, lhs: np.ndarray, flavor: Flavor, tol: float, top_k: int,
            existing: set) -> list[TripleRow]:
    order = sorted(
        (i for i in np.flatnonzero(lhs > 1.0 + tol)),
        key=lambda i: (-round(float(lhs[i]), 12), tuple(triples[i])),
    )
    out = []
    for i in order:
        row = TripleRow(tuple(int(d) for d in triples[i]), flavor)
        if row.key in existing:
            continue
        out.append(row)
        if len(out) >= top_k:
            break
    return out


def separate_triples_local(instance: Instance, pool: ColumnPool, psi_values: Sequence[float],
                           tol: float = SEPARATION_TOL, top_k: int = TOP_K,
                           existing: Sequence[TripleRow] = (), full: bool = False) -> list[TripleRow]:
    """Violated local triple rows, at most ``top_k`` per part.

    Candidates are same-part detections appearing in local columns with
    positive weight; ``full`` enumerates every same-part triple instead.
    """
    psi = np.asarray(psi_values, dtype=float)
    seen = {r.key for r in existing}
    live = [j for j, v in enumerate(psi) if v > tol]
    members = [pool.locals[j].members for j in live]
    weights = psi[live]
    n = len(instance)
    out: list[TripleRow] = []
    for part in instance.parts:
        if full:
            cand = list(instance.by_part[part])
        else:
            cand = sorted({d for mem in members for d in mem if instance.part_of[d] == part})
        if len(cand) < 3:
            continue
        triples = np.array(list(itertools.combinations(cand, 3)), dtype=int)
        lhs = _violations(members, weights, triples, n)
        out.extend(_select(triples, lhs, Flavor.LOCAL, tol, top_k, seen))
    return out


def separate_triples_global(instance: Instance, pool: ColumnPool, gamma_values: Sequence[float],
                            tol: float = SEPARATION_TOL, top_k: int = TOP_K,
                            existing: Sequence[TripleRow] = (), full: bool = False) -> list[TripleRow]:
    """Violated global triple rows over three distinct parts, at most ``top_k`` overall.

    Candidates are detections of fractional global columns; an integral column
    cannot share two members of a violated triple with any other positive
    column without breaking a detection row.
    """
    gamma = np.asarray(gamma_values, dtype=float)
    seen = {r.key for r in existing}
    live = [j for j, v in enumerate(gamma) if v > tol]
    frac = [j for j in live if gamma[j] < 1.0 - tol]
    members = [pool.globals[j].detections for j in live]
    weights = gamma[live]
    if full:
        cand = list(range(len(instance)))
    else:
        cand = sorted({d for j in frac for d in pool.globals[j].detections})
    part_of = instance.part_of
    triples = np.array(
        [t for t in itertools.combinations(cand, 3)
         if len({part_of[t[0]], part_of[t[1]], part_of[t[2]]}) == 3],
        dtype=int,
    ).reshape(-1, 3)
    lhs = _violations(members, weights, triples, len(instance))
    return _select(triples, lhs, Flavor.GLOBAL, tol, top_k, seen)
