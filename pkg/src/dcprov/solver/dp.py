from __future__ import annotations

import numpy as np

from ..models import FleetSpec, InfeasibleDemand, Schedule, min_servers
from ..workload import as_trace

TIE_TOL = 1e-9


def solve_hom_dp(trace, fleet: FleetSpec) -> Schedule:
    """Exact homogeneous schedule by dynamic programming over running counts.

    The state is the number of running servers.  Moving from ``y'`` to ``y``
    costs ``c_on*max(0, y-y') + c_off*max(0, y'-y)``; both branches reduce to
    running prefix/suffix minima, so each slot costs O(I) instead of O(I^2).
    Ties go to the smaller running count, both for the final state and for
    every predecessor during backtracking.
    """
    if fleet.kind != "homogeneous":
        raise ValueError(f"expected a homogeneous fleet, got {fleet.kind}")
    trace = as_trace(trace)
    I = fleet.counts[0]
    v = fleet.capacities[0]
    c = fleet.costs[0]
    run = float(c.run_cost_per_base_slot)
    on = float(c.switch_on_total)
    off = float(c.switch_off_total)
    T = trace.T
    ys = np.arange(I + 1, dtype=float)

    need = np.array([min_servers(d, v) for d in trace.demands], dtype=np.int64)
    if np.any(need > I):
        t = int(np.flatnonzero(need > I)[0])
        raise InfeasibleDemand(t + 1, float(trace.demands[t]), fleet.total_capacity)

    values = np.empty((T, I + 1))
    prev = np.full(I + 1, np.inf)
    prev[0] = 0.0
    for t in range(T):
        up = np.minimum.accumulate(prev - on * ys) + on * ys
        down = np.minimum.accumulate((prev + off * ys)[::-1])[::-1] - off * ys
        cur = np.minimum(up, down) + run * trace.slot_sizes[t] * ys
        cur[:need[t]] = np.inf
        values[t] = cur
        prev = cur

    y = np.empty(T, dtype=np.int64)
    last = values[T - 1]
    best = last.min()
    y[T - 1] = int(np.flatnonzero(last <= best + TIE_TOL * max(1.0, abs(best)))[0])
    for t in range(T - 1, 0, -1):
        target = y[t]
        before = values[t - 1]
        step = on * np.maximum(0.0, target - ys) + off * np.maximum(0.0, ys - target)
        total = before + step
        best = total.min()
        y[t - 1] = int(np.flatnonzero(total <= best + TIE_TOL * max(1.0, abs(best)))[0])
    return Schedule(y[None, :], fleet, trace)
