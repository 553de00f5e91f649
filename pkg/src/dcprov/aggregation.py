"""Workload aggregation: static groups and the local-smooth family.

An aggregation replaces runs of contiguous base slots by one value, either
their maximum (never under-provisions) or their mean (keeps total demand).
Static aggregation uses fixed groups of ``M`` slots.  Dynamic aggregation
merges the adjacent pair with the smallest smooth index ``|d_k - d_{k+1}|``
until ``T_hat`` slots remain.

``local_smooth`` is the plain quadratic reference.  ``improved_local_smooth``
keeps the segments in a doubly linked list and the candidate pairs in a heap
with lazy deletion, so each merge refreshes only the two neighbouring smooth
indexes.  Both pick the lowest-positioned pair on ties and produce identical
output.  ``optimal_partition`` is an exact dynamic program over contiguous
partitions and serves as the quality oracle.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .models import Schedule
from .workload import WorkloadTrace, as_trace

MODES = ("max", "mean")
METHODS = ("static", "local_smooth", "constrained", "optimal")
PARTITION_GUARD = 10 ** 6
PARTITION_MAX_T = 2000


@dataclass(frozen=True, eq=False)
class AggregatedTrace:
    values: np.ndarray
    sizes: np.ndarray
    origin: WorkloadTrace
    mode: str
    method: str = ""
    relaxed: bool = False
    merges: int = 0
    recomputations: int = 0
    heap_ops: int = 0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        sizes = np.array(self.sizes, dtype=np.int64)
        if values.shape != sizes.shape or values.ndim != 1:
            raise ValueError("values and sizes must be 1-d and equally long")
        if np.any(sizes < 1):
            raise ValueError("aggregated slot sizes must be >= 1")
        if int(sizes.sum()) != self.origin.T:
            raise ValueError("aggregated sizes must sum to the base horizon")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        values.setflags(write=False)
        sizes.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sizes", sizes)

    @property
    def T_hat(self) -> int:
        return len(self.sizes)

    @property
    def starts(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.sizes)[:-1]])

    @property
    def alpha(self) -> int:
        return math.ceil(self.origin.T / self.T_hat)

    def segments(self):
        for s, n in zip(self.starts, self.sizes):
            yield int(s), int(s + n)

    def expanded_values(self) -> np.ndarray:
        """Aggregated value repeated over every base slot it covers."""
        return np.repeat(self.values, self.sizes)

    def as_trace(self) -> WorkloadTrace:
        """The aggregated trace as a solver input; slot sizes in base units."""
        base = self.origin.slot_sizes
        sizes = np.array([base[a:b].sum() for a, b in self.segments()])
        return WorkloadTrace(self.values, sizes, self.origin.base_slot_minutes)


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"unknown aggregation mode {mode!r}; expected max or mean")


def _check_target(T, T_hat):
    if not (isinstance(T_hat, (int, np.integer)) and 1 <= T_hat <= T):
        raise ValueError(f"T_hat must be an integer in [1, {T}], got {T_hat!r}")


def alpha_to_t_hat(T: int, alpha: int) -> int:
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    return math.ceil(T / alpha)


def degree_of_aggregation(T: int, T_hat: int) -> int:
    return math.ceil(T / T_hat)


def static_aggregate(trace, M: int, mode: str) -> AggregatedTrace:
    """Group every ``M`` consecutive slots; the last group takes the remainder."""
    trace = as_trace(trace)
    _check_mode(mode)
    T = trace.T
    if not (isinstance(M, (int, np.integer)) and 1 <= M <= T):
        raise ValueError(f"group size M must be an integer in [1, {T}], got {M!r}")
    d = trace.demands
    starts = np.arange(0, T, M)
    sizes = np.diff(np.append(starts, T))
    if mode == "max":
        values = np.maximum.reduceat(d, starts)
    else:
        values = np.add.reduceat(d, starts) / sizes
    return AggregatedTrace(values, sizes, trace, mode, method="static", merges=T - len(sizes))


def _merge_value(mode, a_val, b_val, a_sum, b_sum, size):
    if mode == "max":
        return max(a_val, b_val)
    return (a_sum + b_sum) / size


def local_smooth(trace, T_hat: int, mode: str, S: int | None = None) -> AggregatedTrace:
    """Quadratic reference: rescan all smooth indexes before every merge.

    With ``S`` only pairs whose combined size is at most ``S`` are candidates;
    if none is left the result keeps more than ``T_hat`` slots and is flagged
    ``relaxed``.
    """
    trace = as_trace(trace)
    _check_mode(mode)
    _check_target(trace.T, T_hat)
    if S is not None and S < 1:
        raise ValueError("S must be >= 1")
    vals = [float(v) for v in trace.demands]
    sums = list(vals)
    sizes = [1] * trace.T
    merges = 0
    while len(vals) > T_hat:
        best = None
        for k in range(len(vals) - 1):
            if S is not None and sizes[k] + sizes[k + 1] > S:
                continue
            si = abs(vals[k] - vals[k + 1])
            if best is None or si < best[0]:
                best = (si, k)
        if best is None:
            break
        k = best[1]
        size = sizes[k] + sizes[k + 1]
        vals[k] = _merge_value(mode, vals[k], vals[k + 1], sums[k], sums[k + 1], size)
        sums[k] += sums[k + 1]
        sizes[k] = size
        del vals[k + 1], sums[k + 1], sizes[k + 1]
        merges += 1
    return AggregatedTrace(vals, sizes, trace, mode, method="local_smooth",
                           relaxed=len(vals) > T_hat, merges=merges)


def improved_local_smooth(trace, T_hat: int, mode: str, S: int | None = None) -> AggregatedTrace:
    """Same output as :func:`local_smooth` with O(1) index updates per merge.

    Segments are identified by their first base slot, which also orders them,
    so heap keys ``(si, left_start)`` reproduce the lowest-index tie rule.
    ``recomputations`` counts smooth indexes evaluated after the initial pass
    and ``heap_ops`` counts heap insertions (initial ones included) and pops.
    """
    trace = as_trace(trace)
    _check_mode(mode)
    _check_target(trace.T, T_hat)
    if S is not None and S < 1:
        raise ValueError("S must be >= 1")
    T = trace.T
    vals = [float(v) for v in trace.demands]
    sums = list(vals)
    sizes = [1] * T
    nxt = list(range(1, T)) + [-1]
    prv = [-1] + list(range(T - 1))
    version = [0] * T
    alive = [True] * T

    def entry(a):
        b = nxt[a]
        if S is not None and sizes[a] + sizes[b] > S:
            return None
        return (abs(vals[a] - vals[b]), a, version[a], b, version[b])

    heap = [e for e in (entry(a) for a in range(T - 1)) if e is not None]
    heapq.heapify(heap)
    count = T
    merges = recomputations = 0
    heap_ops = len(heap)
    while count > T_hat and heap:
        _, a, va, b, vb = heapq.heappop(heap)
        heap_ops += 1
        if not (alive[a] and alive[b] and version[a] == va and version[b] == vb):
            continue
        size = sizes[a] + sizes[b]
        vals[a] = _merge_value(mode, vals[a], vals[b], sums[a], sums[b], size)
        sums[a] += sums[b]
        sizes[a] = size
        alive[b] = False
        version[a] += 1
        nxt[a] = nxt[b]
        if nxt[b] != -1:
            prv[nxt[b]] = a
        count -= 1
        merges += 1
        for left in (prv[a], a):
            if left != -1 and nxt[left] != -1:
                recomputations += 1
                e = entry(left)
                if e is not None:
                    heapq.heappush(heap, e)
                    heap_ops += 1
    keep = [k for k in range(T) if alive[k]]
    return AggregatedTrace([vals[k] for k in keep], [sizes[k] for k in keep], trace, mode,
                           method="local_smooth", relaxed=count > T_hat, merges=merges,
                           recomputations=recomputations, heap_ops=heap_ops)


def constrained_local_smooth(trace, T_hat: int, S: int, mode: str = "mean") -> AggregatedTrace:
    """Local smooth where no merged slot may span more than ``S`` base slots."""
    if S is None or S < 1:
        raise ValueError("S must be >= 1")
    agg = improved_local_smooth(trace, T_hat, mode, S=S)
    return _with_method(agg, "constrained")


def _with_method(agg, method):
    return AggregatedTrace(agg.values, agg.sizes, agg.origin, agg.mode, method=method,
                           relaxed=agg.relaxed, merges=agg.merges,
                           recomputations=agg.recomputations, heap_ops=agg.heap_ops)


class _Fenwick:
    def __init__(self, n):
        self.n = n
        self.cnt = [0] * (n + 1)
        self.tot = [0.0] * (n + 1)

    def add(self, i, v):
        i += 1
        while i <= self.n:
            self.cnt[i] += 1
            self.tot[i] += v
            i += i & -i

    def prefix(self, i):
        """Count and sum of the first ``i`` ranks."""
        c, s = 0, 0.0
        while i > 0:
            c += self.cnt[i]
            s += self.tot[i]
            i -= i & -i
        return c, s


def _segment_costs(d, mode, S):
    """``C[i, j]`` = strict cost of the segment ``d[i:j]`` (inf if longer than S)."""
    T = len(d)
    C = np.full((T + 1, T + 1), np.inf)
    if mode == "max":
        for i in range(T):
            j_end = T if S is None else min(T, i + S)
            seg = d[i:j_end]
            run_max = np.maximum.accumulate(seg)
            run_sum = np.cumsum(seg)
            n = np.arange(1, len(seg) + 1)
            C[i, i + 1:j_end + 1] = np.maximum(run_max * n - run_sum, 0.0)
        return C
    order = np.argsort(d, kind="stable")
    ranks = np.empty(T, dtype=np.int64)
    ranks[order] = np.arange(T)
    sorted_d = d[order]
    for i in range(T):
        tree = _Fenwick(T)
        total = 0.0
        j_end = T if S is None else min(T, i + S)
        for j in range(i, j_end):
            tree.add(int(ranks[j]), float(d[j]))
            total += d[j]
            n = j - i + 1
            m = total / n
            below = int(np.searchsorted(sorted_d, m, side="right"))
            c_lo, s_lo = tree.prefix(below)
            cost = (m * c_lo - s_lo) + (total - s_lo) - m * (n - c_lo)
            C[i, j + 1] = max(cost, 0.0)
    return C


def optimal_partition(trace, T_hat: int, mode: str, S: int | None = None) -> AggregatedTrace:
    """Exact minimizer of the strict objective over contiguous partitions.

    The objective is over-provisioning in max mode and rearrangement in mean
    mode.  Dynamic program over (segments used, end position), O(T^2 T_hat).
    Raises ValueError when no partition respects ``S``.
    """
    trace = as_trace(trace)
    _check_mode(mode)
    T = trace.T
    _check_target(T, T_hat)
    if T * T_hat > PARTITION_GUARD or T > PARTITION_MAX_T:
        raise ValueError(
            f"partition search too large (T={T}, T_hat={T_hat}); "
            f"needs T*T_hat <= {PARTITION_GUARD} and T <= {PARTITION_MAX_T}")
    if S is not None and (S < 1 or S * T_hat < T):
        raise ValueError(f"no partition into {T_hat} segments of length <= {S}")
    d = np.asarray(trace.demands, dtype=float)
    C = _segment_costs(d, mode, S)
    f = np.full(T + 1, np.inf)
    f[0] = 0.0
    back = np.zeros((T_hat + 1, T + 1), dtype=np.int64)
    for k in range(1, T_hat + 1):
        g = np.full(T + 1, np.inf)
        for j in range(k, T - (T_hat - k) + 1):
            cand = f[:j] + C[:j, j]
            i = int(np.argmin(cand))
            g[j] = cand[i]
            back[k, j] = i
        f = g
    cuts = [T]
    j = T
    for k in range(T_hat, 0, -1):
        j = int(back[k, j])
        cuts.append(j)
    cuts.reverse()
    sizes = np.diff(cuts)
    segs = [d[a:b] for a, b in zip(cuts[:-1], cuts[1:])]
    if mode == "max":
        values = [s.max() for s in segs]
    else:
        values = [math.fsum(s) / len(s) for s in segs]
    return AggregatedTrace(values, sizes, trace, mode, method="optimal",
                           merges=T - T_hat)


def overprovisioning_cost(agg: AggregatedTrace, price: float | None = None) -> float:
    """Capacity provided beyond demand, summed over base slots.

    With ``price`` (cents per unit capacity per base slot, e.g. run cost over
    server capacity) the result is in cents.
    """
    if agg.mode != "max":
        raise ValueError("over-provisioning is defined for max-mode aggregation")
    gap = agg.expanded_values() - agg.origin.demands
    if price is None:
        return float(math.fsum(gap))
    return float(math.fsum(gap * agg.origin.slot_sizes * price))


def rearrangement_amount(agg: AggregatedTrace) -> float:
    """Demand moved in time: sum of |d - mean| over base slots."""
    if agg.mode != "mean":
        raise ValueError("rearrangement is defined for mean-mode aggregation")
    return float(math.fsum(np.abs(agg.origin.demands - agg.expanded_values())))


def strict_objective(agg: AggregatedTrace) -> float:
    """The aggregation error the dynamic schemes try to minimize.

    Computed from the partition alone (values are re-derived from the base
    demands), so two aggregations with the same segments score identically.
    """
    d = agg.origin.demands
    parts = []
    for a, b in agg.segments():
        seg = d[a:b]
        if agg.mode == "max":
            parts.append(math.fsum(seg.max() - seg))
        else:
            m = math.fsum(seg) / len(seg)
            parts.append(math.fsum(np.abs(seg - m)))
    return float(math.fsum(parts))


def aggregate(trace, method: str, mode: str, alpha: int | None = None,
              T_hat: int | None = None, S: int | None = None) -> AggregatedTrace:
    """Dispatch on method name; give either ``alpha`` or ``T_hat``."""
    trace = as_trace(trace)
    if (alpha is None) == (T_hat is None):
        raise ValueError("give exactly one of alpha and T_hat")
    if T_hat is None:
        T_hat = alpha_to_t_hat(trace.T, alpha)
    _check_target(trace.T, T_hat)
    if method == "static":
        M = alpha if alpha is not None else math.ceil(trace.T / T_hat)
        return static_aggregate(trace, M, mode)
    if method == "local_smooth":
        return improved_local_smooth(trace, T_hat, mode)
    if method == "constrained":
        if S is None:
            raise ValueError("the constrained method needs S")
        return constrained_local_smooth(trace, T_hat, S, mode)
    if method == "optimal":
        return optimal_partition(trace, T_hat, mode, S)
    raise ValueError(f"unknown aggregation method {method!r}; expected one of {METHODS}")


def expand_schedule(agg_schedule: Schedule, agg: AggregatedTrace) -> Schedule:
    """Replicate each aggregated slot's counts over the base slots it covers."""
    running = agg_schedule.running
    if running.shape[1] != agg.T_hat:
        raise ValueError(
            f"schedule has {running.shape[1]} slots, aggregation has {agg.T_hat}")
    return Schedule(np.repeat(running, agg.sizes, axis=1), agg_schedule.fleet, agg.origin)


def save_aggregated(agg: AggregatedTrace, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["agg_slot", "value", "size", "first_base_slot"])
        for k, (v, n, s) in enumerate(zip(agg.values, agg.sizes, agg.starts), 1):
            w.writerow([k, repr(float(v)), int(n), int(s) + 1])
