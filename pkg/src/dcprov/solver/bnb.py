"""Best-first branch-and-bound over the simplex relaxation.

Nodes are explored in order of their parent's LP bound (deeper nodes first
on ties, then creation order), branching on the most fractional integer
variable with the lowest index winning ties.  Presolve only tightens bounds:
singleton rows become variable bounds, integer bounds are rounded, and rows
over integer variables with integer coefficients get their right-hand side
rounded to the nearest attainable activity.
"""

from __future__ import annotations

import heapq
import math
import time
from functools import reduce

import numpy as np
import scipy.sparse as sp

from .lp import StandardForm, simplex
from .types import (FEAS_TOL, INFEASIBLE, INT_TOL, LIMIT, NUMERICAL, OPTIMAL,
                    UNBOUNDED, Solution, SolveOptions)


class _Presolved:
    def __init__(self, A, sense, rhs, lb, ub, infeasible=False):
        self.A, self.sense, self.rhs = A, sense, rhs
        self.lb, self.ub = lb, ub
        self.infeasible = infeasible


def _is_integral(v):
    return abs(v - round(v)) <= 1e-12


def presolve(instance, extra_rows=None) -> _Presolved:
    A = instance.A.tocsr()
    sense = instance.sense.copy()
    rhs = instance.rhs.copy()
    if extra_rows is not None:
        eA, esense, erhs = extra_rows
        A = sp.vstack([A, eA], format="csr")
        sense = np.concatenate([sense, esense])
        rhs = np.concatenate([rhs, erhs])
    lb = instance.lb.copy()
    ub = instance.ub.copy()
    integer = instance.integer
    keep = np.ones(A.shape[0], dtype=bool)

    for r in range(A.shape[0]):
        start, end = A.indptr[r], A.indptr[r + 1]
        cols = A.indices[start:end]
        vals = A.data[start:end]
        nz = vals != 0
        cols, vals = cols[nz], vals[nz]
        if cols.size == 0:
            ok = {"<": 0 <= rhs[r] + FEAS_TOL, ">": 0 >= rhs[r] - FEAS_TOL,
                  "=": abs(rhs[r]) <= FEAS_TOL}[sense[r]]
            if not ok:
                return _Presolved(A, sense, rhs, lb, ub, infeasible=True)
            keep[r] = False
            continue
        if cols.size == 1:
            j, a = int(cols[0]), float(vals[0])
            bound = rhs[r] / a
            s = sense[r]
            if a < 0 and s != "=":
                s = "<" if s == ">" else ">"
            if s in (">", "="):
                lb[j] = max(lb[j], bound)
            if s in ("<", "="):
                ub[j] = min(ub[j], bound)
            keep[r] = False
            continue
        if np.all(integer[cols]) and all(_is_integral(v) for v in vals):
            g = reduce(math.gcd, (int(round(abs(v))) for v in vals))
            q = rhs[r] / g
            if sense[r] == ">":
                rhs[r] = g * math.ceil(q - FEAS_TOL)
            elif sense[r] == "<":
                rhs[r] = g * math.floor(q + FEAS_TOL)
            elif not _is_integral(q):
                return _Presolved(A, sense, rhs, lb, ub, infeasible=True)

    lb[integer] = np.ceil(lb[integer] - INT_TOL)
    ub[integer] = np.floor(ub[integer] + INT_TOL)
    infeasible = bool(np.any(lb > ub + FEAS_TOL))
    return _Presolved(A[keep], sense[keep], rhs[keep], lb, ub, infeasible)


def _symmetry_rows(instance):
    """x[i,t] - x[i+1,t] >= 0 for consecutive identical heterogeneous servers."""
    pairs = instance.meta.get("identical_pairs", ())
    T = instance.meta.get("T", 0)
    rows, cols, vals = [], [], []
    r = 0
    for i in pairs:
        for t in range(T):
            rows += [r, r]
            cols += [i * T + t, (i + 1) * T + t]
            vals += [1.0, -1.0]
            r += 1
    A = sp.csr_matrix((vals, (rows, cols)), shape=(r, instance.n_vars))
    return A, np.full(r, ">"), np.zeros(r)


def _most_fractional(x, integer):
    idx = np.flatnonzero(integer)
    frac = x[idx] - np.floor(x[idx])
    dist = np.minimum(frac, 1.0 - frac)
    frac_mask = dist > INT_TOL
    if not frac_mask.any():
        return None
    best = np.max(dist[frac_mask])
    # lowest index among the most fractional
    cand = idx[frac_mask & (dist >= best - 1e-12)]
    return int(cand[0])


def solve_milp(instance, options: SolveOptions | None = None) -> Solution:
    options = options or SolveOptions()
    start = time.perf_counter()
    deadline = None if options.time_limit_seconds is None else start + options.time_limit_seconds
    sol = Solution(status=INFEASIBLE, names=instance.names)

    extra = None
    if options.symmetry_breaking and instance.model == "het":
        extra = _symmetry_rows(instance)
    pre = presolve(instance, extra)
    if pre.infeasible:
        sol.wall_time = time.perf_counter() - start
        return sol
    sf = StandardForm.from_rows(pre.A, pre.sense, pre.rhs, instance.c)
    integer = instance.integer
    gap_tol = options.absolute_gap_tolerance

    incumbent_x = None
    incumbent = math.inf
    counter = 0
    heap = [(-math.inf, 0, counter, pre.lb, pre.ub)]
    nodes = 0
    lp_iters = 0
    status = OPTIMAL

    while heap:
        bound, neg_depth, _, lb, ub = heapq.heappop(heap)
        if bound >= incumbent - gap_tol:
            continue
        if options.node_limit is not None and nodes >= options.node_limit:
            heapq.heappush(heap, (bound, neg_depth, counter, lb, ub))
            status = LIMIT
            break
        if deadline is not None and time.perf_counter() > deadline:
            heapq.heappush(heap, (bound, neg_depth, counter, lb, ub))
            status = LIMIT
            break
        nodes += 1
        res = simplex(sf, lb, ub, deadline=deadline)
        lp_iters += res.iterations
        if res.status == INFEASIBLE:
            continue
        if res.status == UNBOUNDED:
            status = UNBOUNDED
            break
        if res.status == NUMERICAL:
            status = NUMERICAL
            break
        if res.status == LIMIT:
            heapq.heappush(heap, (bound, neg_depth, counter, lb, ub))
            status = LIMIT
            break
        if res.objective >= incumbent - gap_tol:
            continue
        j = _most_fractional(res.x, integer)
        if j is None:
            x = res.x.copy()
            x[integer] = np.round(x[integer])
            if instance.max_violation(x) <= FEAS_TOL:
                value = instance.objective_value(x)
                if value < incumbent:
                    incumbent, incumbent_x = value, x
            continue
        v = res.x[j]
        down_ub = ub.copy()
        down_ub[j] = math.floor(v)
        up_lb = lb.copy()
        up_lb[j] = math.ceil(v)
        for child_lb, child_ub in ((lb, down_ub), (up_lb, ub)):
            counter += 1
            heapq.heappush(heap, (res.objective, neg_depth - 1, counter, child_lb, child_ub))

    sol.nodes = nodes
    sol.lp_iterations = lp_iters
    open_bounds = [h[0] for h in heap if h[0] < incumbent - gap_tol]
    if incumbent_x is not None:
        sol.x = incumbent_x
        sol.objective = incumbent
        sol.bound = min([incumbent] + open_bounds) if status == LIMIT else incumbent
    if status == OPTIMAL:
        sol.status = OPTIMAL if incumbent_x is not None else INFEASIBLE
    else:
        sol.status = status
    sol.wall_time = time.perf_counter() - start
    return sol
