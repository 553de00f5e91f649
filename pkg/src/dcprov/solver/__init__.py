"""Exact solvers: simplex, branch-and-bound, homogeneous DP and brute force."""

from __future__ import annotations

import time

from ..models import MODEL_KIND, build, decode
from .brute import brute_force
from .bnb import presolve, solve_milp
from .dp import solve_hom_dp
from .lp import solve_lp
from .types import (INFEASIBLE, LIMIT, NUMERICAL, OPTIMAL, UNBOUNDED,
                    SearchSpaceTooLarge, Solution, SolveOptions)

__all__ = [
    "solve_lp", "solve_milp", "solve_hom_dp", "brute_force", "presolve",
    "solve_model", "SolveOptions", "Solution", "SearchSpaceTooLarge",
    "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "LIMIT", "NUMERICAL", "STATS_HEADER",
    "stats_row",
]

STATS_HEADER = ("model", "T", "I", "J", "alpha", "status", "objective",
                "nodes", "lp_iters", "wall_ms")


def solve_model(trace, fleet, model, options=None, method="auto"):
    """Solve one provisioning program and return ``(schedule, solution)``.

    ``method`` is ``"auto"`` (DP for hom, branch-and-bound otherwise),
    ``"dp"``, ``"bnb"`` or ``"brute"``.  ``schedule`` is None unless the
    solution is optimal or carries a feasible incumbent.
    """
    if method == "auto":
        method = "dp" if model == "hom" else "bnb"
    if method == "dp":
        if model != "hom":
            raise ValueError("the DP only handles the homogeneous program")
        start = time.perf_counter()
        instance = build(model, trace, fleet)
        sched = solve_hom_dp(trace, instance_fleet(fleet, model))
        x = sched.as_vector()
        sol = Solution(OPTIMAL, objective=instance.objective_value(x), x=x,
                       names=instance.names, nodes=0)
        sol.bound = sol.objective
        sol.wall_time = time.perf_counter() - start
        return sched, sol
    instance = build(model, trace, fleet)
    if method == "bnb":
        sol = solve_milp(instance, options)
    elif method == "brute":
        sol = brute_force(instance)
    else:
        raise ValueError(f"unknown method {method!r}")
    sched = None
    if sol.x is not None:
        sched = decode(sol.x, trace, instance_fleet(fleet, model))
    return sched, sol


def instance_fleet(fleet, model):
    return fleet.as_kind(MODEL_KIND[model])


def stats_row(model, trace, fleet, alpha, sol) -> dict:
    return {
        "model": model, "T": trace.T, "I": fleet.total_servers,
        "J": fleet.n_classes if model != "hom" else 1, "alpha": alpha,
        "status": sol.status, "objective": sol.objective, "nodes": sol.nodes,
        "lp_iters": sol.lp_iterations, "wall_ms": round(sol.wall_time * 1000, 3),
    }
