"""Exhaustive enumeration oracle for tiny integer programs.

Variables are assigned one at a time (slot by slot when the instance carries
a ``K x T`` layout) and a row is checked the moment its last variable is
fixed.  Partial assignments whose cost plus the cheapest completion cannot
beat the incumbent are dropped.  No relaxation is ever solved, so results are
independent of the simplex code.  ``max_nodes`` caps the number of partial
assignments visited.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .types import FEAS_TOL, INFEASIBLE, OPTIMAL, SearchSpaceTooLarge, Solution

MAX_NODES = 10 ** 7


def _variable_order(instance):
    K = instance.meta.get("K")
    T = instance.meta.get("T")
    if K and T and instance.n_vars == 3 * K * T:
        order = []
        for t in range(T):
            for k in range(K):
                base = k * T + t
                order += [base, K * T + base, 2 * K * T + base]
        return order
    return list(range(instance.n_vars))


def brute_force(instance, max_nodes: int = MAX_NODES) -> Solution:
    start = time.perf_counter()
    if not instance.integer.all():
        raise ValueError("brute force needs an all-integer instance")
    lb = np.ceil(instance.lb - 1e-9)
    ub = np.floor(instance.ub + 1e-9)
    if not (np.all(np.isfinite(lb)) and np.all(np.isfinite(ub))):
        raise ValueError("brute force needs finite bounds on every variable")

    order = _variable_order(instance)
    n = len(order)
    pos = {j: p for p, j in enumerate(order)}
    A = instance.A.tocsr()
    rows_done_at = [[] for _ in range(n)]
    row_terms = []
    for r in range(A.shape[0]):
        cols = A.indices[A.indptr[r]:A.indptr[r + 1]]
        vals = A.data[A.indptr[r]:A.indptr[r + 1]]
        terms = [(int(j), float(a)) for j, a in zip(cols, vals) if a != 0]
        row_terms.append(terms)
        last = max((pos[j] for j, _ in terms), default=0)
        rows_done_at[last].append(r)
    sense = instance.sense.tolist()
    rhs = instance.rhs.tolist()
    c = instance.c.tolist()

    domains = []
    for j in order:
        vals = list(range(int(lb[j]), int(ub[j]) + 1))
        if c[j] < 0:
            vals.reverse()
        domains.append(vals)
    cheapest = [min(c[j] * lb[j], c[j] * ub[j]) for j in order]
    rest = [0.0] * (n + 1)
    for p in range(n - 1, -1, -1):
        rest[p] = rest[p + 1] + cheapest[p]

    x = [0.0] * instance.n_vars
    best = {"value": math.inf, "x": None}
    nodes = 0

    def row_ok(r):
        act = 0.0
        for j, a in row_terms[r]:
            act += a * x[j]
        s = sense[r]
        if s == ">":
            return act >= rhs[r] - FEAS_TOL
        if s == "<":
            return act <= rhs[r] + FEAS_TOL
        return abs(act - rhs[r]) <= FEAS_TOL

    def visit(p, partial):
        nonlocal nodes
        if p == n:
            value = instance.objective_value(x)
            if value < best["value"]:
                best["value"] = value
                best["x"] = list(x)
            return
        j = order[p]
        for val in domains[p]:
            nodes += 1
            if nodes > max_nodes:
                raise SearchSpaceTooLarge(
                    f"brute force exceeded {max_nodes} partial assignments")
            cost = partial + c[j] * val
            if cost + rest[p + 1] > best["value"] + 1e-12 * max(1.0, abs(best["value"])):
                continue
            x[j] = float(val)
            if all(row_ok(r) for r in rows_done_at[p]):
                visit(p + 1, cost)
        x[j] = 0.0

    # rows with no variables at all
    for r, terms in enumerate(row_terms):
        if not terms and not row_ok(r):
            return Solution(INFEASIBLE, names=instance.names,
                            wall_time=time.perf_counter() - start)
    visit(0, 0.0)
    sol = Solution(INFEASIBLE, names=instance.names, nodes=nodes)
    if best["x"] is not None:
        sol.status = OPTIMAL
        sol.x = np.array(best["x"])
        sol.objective = best["value"]
        sol.bound = best["value"]
    sol.wall_time = time.perf_counter() - start
    return sol
