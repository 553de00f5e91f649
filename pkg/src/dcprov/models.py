"""Provisioning programs for homogeneous, heterogeneous and clustered fleets.

Every fleet is a list of server classes ``k`` with capacity ``v_k``, size
``n_k`` and cost record ``c_k``.  A homogeneous fleet is one class of ``I``
servers, a heterogeneous fleet is ``I`` classes of one server each, and a
clustered fleet is ``J`` classes.  All three programs share one variable
layout: three ``K x T`` blocks (running, switched on, switched off) stored
row-major, block after block.  All servers are off before slot 1, so a
server running in slot 1 pays one switch-on.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .costs import CostParams, default_cost_params, rational
from .workload import WorkloadTrace, as_trace

KINDS = ("homogeneous", "heterogeneous", "clustered")

# Demand is treated as covered when capacity >= demand - FEAS_TOL.
FEAS_TOL = 1e-9
EXACT_COVER_LIMIT = 20


class InfeasibleDemand(ValueError):
    def __init__(self, slot: int, demand: float, capacity: float):
        super().__init__(
            f"slot {slot}: demand {demand:g} exceeds fleet capacity {capacity:g}")
        self.slot = slot
        self.demand = demand
        self.capacity = capacity


def min_servers(demand: float, capacity: float = 1.0) -> int:
    """Fewest servers of ``capacity`` covering ``demand``."""
    return max(0, math.ceil(demand / capacity - FEAS_TOL))


@dataclass(frozen=True)
class FleetSpec:
    kind: str
    capacities: tuple
    counts: tuple
    costs: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown fleet kind {self.kind!r}")
        caps = tuple(float(v) for v in self.capacities)
        counts = tuple(int(n) for n in self.counts)
        costs = tuple(self.costs)
        if not (len(caps) == len(counts) == len(costs)) or not caps:
            raise ValueError("capacities, counts and costs must be equally long and non-empty")
        if any(v <= 0 for v in caps):
            raise ValueError("server capacities must be positive")
        if any(n < 1 for n in counts):
            raise ValueError("class counts must be >= 1")
        if self.kind == "homogeneous" and len(caps) != 1:
            raise ValueError("a homogeneous fleet has exactly one server class")
        if self.kind == "heterogeneous" and any(n != 1 for n in counts):
            raise ValueError("heterogeneous servers are listed one by one")
        object.__setattr__(self, "capacities", caps)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "costs", costs)

    @classmethod
    def homogeneous(cls, I: int, capacity: float = 1.0,
                    costs: CostParams | None = None) -> "FleetSpec":
        return cls("homogeneous", (capacity,), (I,), (costs or default_cost_params(),))

    @classmethod
    def heterogeneous(cls, capacities: Sequence[float],
                      costs: CostParams | Sequence[CostParams] | None = None) -> "FleetSpec":
        n = len(capacities)
        return cls("heterogeneous", tuple(capacities), (1,) * n, _per_class(costs, n))

    @classmethod
    def clustered(cls, capacities: Sequence[float], counts: Sequence[int],
                  costs: CostParams | Sequence[CostParams] | None = None) -> "FleetSpec":
        return cls("clustered", tuple(capacities), tuple(counts),
                   _per_class(costs, len(capacities)))

    @classmethod
    def equal_clusters(cls, I: int, J: int, capacity: float = 1.0,
                       costs: CostParams | None = None) -> "FleetSpec":
        """Split ``I`` identical servers into ``J`` near-equal clusters."""
        if not 1 <= J <= I:
            raise ValueError("need 1 <= J <= I")
        base, extra = divmod(I, J)
        counts = [base + (j < extra) for j in range(J)]
        return cls.clustered([capacity] * J, counts, costs)

    @property
    def n_classes(self) -> int:
        return len(self.counts)

    @property
    def total_servers(self) -> int:
        return sum(self.counts)

    @property
    def total_capacity(self) -> float:
        return float(sum(v * n for v, n in zip(self.capacities, self.counts)))

    def with_costs(self, costs: CostParams) -> "FleetSpec":
        return replace(self, costs=(costs,) * self.n_classes)

    def as_kind(self, kind: str) -> "FleetSpec":
        """Re-express the same servers as another program family."""
        if kind == self.kind:
            return self
        if kind == "heterogeneous":
            caps, costs = [], []
            for v, n, c in zip(self.capacities, self.counts, self.costs):
                caps += [v] * n
                costs += [c] * n
            return FleetSpec.heterogeneous(caps, costs)
        if kind == "clustered":
            return FleetSpec("clustered", self.capacities, self.counts, self.costs)
        if len(set(self.capacities)) != 1 or len(set(self.costs)) != 1:
            raise ValueError("only identical servers can form a homogeneous fleet")
        return FleetSpec.homogeneous(self.total_servers, self.capacities[0], self.costs[0])


def _per_class(costs, n):
    if costs is None:
        return (default_cost_params(),) * n
    if isinstance(costs, CostParams):
        return (costs,) * n
    costs = tuple(costs)
    if len(costs) != n:
        raise ValueError(f"expected {n} cost records, got {len(costs)}")
    return costs


@dataclass(frozen=True, eq=False)
class MilpInstance:
    """Minimize ``c @ x`` subject to ``A x (<=|>=|=) rhs`` and bounds.

    ``sense`` holds one of ``"<"``, ``">"``, ``"="`` per row.
    """

    names: tuple
    c: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    A: sp.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    row_names: tuple = ()
    model: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.names)
        for attr in ("c", "lb", "ub"):
            arr = np.asarray(getattr(self, attr), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{attr} must have one entry per variable")
            object.__setattr__(self, attr, arr)
        integer = np.asarray(self.integer, dtype=bool)
        if integer.shape != (n,):
            raise ValueError("integer must have one entry per variable")
        object.__setattr__(self, "integer", integer)
        A = sp.csr_matrix(self.A, dtype=float)
        if A.shape[1] != n:
            raise ValueError("constraint rows reference undeclared variables")
        object.__setattr__(self, "A", A)
        m = A.shape[0]
        sense = np.asarray(self.sense, dtype="<U1")
        rhs = np.asarray(self.rhs, dtype=float)
        if sense.shape != (m,) or rhs.shape != (m,):
            raise ValueError("sense and rhs must have one entry per row")
        if not set(sense.tolist()) <= {"<", ">", "="}:
            raise ValueError("row sense must be '<', '>' or '='")
        object.__setattr__(self, "sense", sense)
        object.__setattr__(self, "rhs", rhs)
        if np.any(self.lb > self.ub):
            bad = int(np.flatnonzero(self.lb > self.ub)[0])
            raise ValueError(f"variable {self.names[bad]}: lower bound exceeds upper bound")

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def relaxed(self) -> "MilpInstance":
        return replace(self, integer=np.zeros(self.n_vars, dtype=bool))

    def objective_value(self, x) -> float:
        """``c @ x`` rounded once from the exact rational value.

        Two assignments with the same true cost therefore report bit-identical
        objectives, whatever order the solver summed them in.
        """
        x = np.asarray(x, dtype=float)
        total = Fraction(0)
        for j in np.flatnonzero((self.c != 0) & (x != 0)):
            total += rational(self.c[j]) * Fraction(float(x[j]))
        return float(total)

    def max_violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        act = self.A @ x
        viol = np.zeros(self.n_rows)
        le, ge, eq = self.sense == "<", self.sense == ">", self.sense == "="
        viol[le] = act[le] - self.rhs[le]
        viol[ge] = self.rhs[ge] - act[ge]
        viol[eq] = np.abs(act[eq] - self.rhs[eq])
        bound = np.maximum(self.lb - x, x - self.ub)
        worst = max(viol.max(initial=0.0), bound.max(initial=0.0))
        return float(max(worst, 0.0))

    def integrality_violation(self, x) -> float:
        x = np.asarray(x, dtype=float)[self.integer]
        return float(np.abs(x - np.round(x)).max(initial=0.0))


class _RowBuilder:
    def __init__(self):
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.vals: list[float] = []
        self.sense: list[str] = []
        self.rhs: list[float] = []
        self.names: list[str] = []

    def add(self, coefs: dict, sense: str, rhs: float, name: str):
        r = len(self.sense)
        for j, a in coefs.items():
            if a != 0:
                self.rows.append(r)
                self.cols.append(j)
                self.vals.append(a)
        self.sense.append(sense)
        self.rhs.append(rhs)
        self.names.append(name)

    def matrix(self, n):
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(len(self.sense), n))


def check_capacity(trace: WorkloadTrace, fleet: FleetSpec) -> None:
    cap = fleet.total_capacity
    over = np.flatnonzero(trace.demands > cap + FEAS_TOL)
    if over.size:
        t = int(over[0])
        raise InfeasibleDemand(t + 1, float(trace.demands[t]), cap)


def _expect_kind(fleet: FleetSpec, kind: str):
    if fleet.kind != kind:
        raise ValueError(f"expected a {kind} fleet, got {fleet.kind}")


_PREFIX = {"homogeneous": "y", "heterogeneous": "x", "clustered": "z"}


def _var_names(fleet: FleetSpec, T: int):
    p = _PREFIX[fleet.kind]
    K = fleet.n_classes
    if fleet.kind == "homogeneous":
        cell = [f"[{t + 1}]" for t in range(T)]
    else:
        cell = [f"[{k + 1},{t + 1}]" for k in range(K) for t in range(T)]
    return tuple(f"{p}{suffix}{c}" for suffix in ("", "+", "-") for c in cell)


def _objective(fleet: FleetSpec, trace: WorkloadTrace):
    T = trace.T
    run = np.array([[c.run_cost_per_base_slot] for c in fleet.costs], dtype=float)
    c_run = (run * trace.slot_sizes[None, :]).reshape(-1)
    c_on = np.repeat([float(c.switch_on_total) for c in fleet.costs], T)
    c_off = np.repeat([float(c.switch_off_total) for c in fleet.costs], T)
    return np.concatenate([c_run, c_on, c_off])


def _build_counts(trace, fleet, model):
    """Shared integer-count program for the homogeneous and clustered families."""
    trace = as_trace(trace)
    check_capacity(trace, fleet)
    K, T = fleet.n_classes, trace.T
    n = 3 * K * T
    run = lambda k, t: k * T + t
    on = lambda k, t: K * T + k * T + t
    off = lambda k, t: 2 * K * T + k * T + t
    rows = _RowBuilder()
    for t in range(T):
        rows.add({run(k, t): fleet.capacities[k] for k in range(K)}, ">",
                 float(trace.demands[t]), f"demand[{t + 1}]")
    for k in range(K):
        for t in range(T):
            tag = f"[{k + 1},{t + 1}]" if model == "hh" else f"[{t + 1}]"
            up = {on(k, t): 1.0, run(k, t): -1.0}
            down = {off(k, t): 1.0, run(k, t): 1.0}
            if t > 0:
                up[run(k, t - 1)] = 1.0
                down[run(k, t - 1)] = -1.0
            rows.add(up, ">", 0.0, f"switch_on{tag}")
            rows.add({on(k, t): 1.0}, ">", 0.0, f"switch_on_nonneg{tag}")
            rows.add(down, ">", 0.0, f"switch_off{tag}")
            rows.add({off(k, t): 1.0}, ">", 0.0, f"switch_off_nonneg{tag}")
    ub = np.repeat(np.array(fleet.counts, dtype=float), T)
    return MilpInstance(
        names=_var_names(fleet, T),
        c=_objective(fleet, trace),
        lb=np.zeros(n),
        ub=np.tile(ub, 3),
        integer=np.ones(n, dtype=bool),
        A=rows.matrix(n),
        sense=np.array(rows.sense),
        rhs=np.array(rows.rhs),
        row_names=tuple(rows.names),
        model=model,
        meta={"T": T, "K": K, "I": fleet.total_servers,
              "J": fleet.n_classes if model == "hh" else 1},
    )


def build_hom(trace, fleet: FleetSpec) -> MilpInstance:
    """Integer program over per-slot running counts of identical servers."""
    _expect_kind(fleet, "homogeneous")
    return _build_counts(trace, fleet, "hom")


def build_hh(trace, fleet: FleetSpec) -> MilpInstance:
    _expect_kind(fleet, "clustered")
    return _build_counts(trace, fleet, "hh")


def build_het(trace, fleet: FleetSpec) -> MilpInstance:
    """Binary program with one on/off state per server and slot."""
    _expect_kind(fleet, "heterogeneous")
    trace = as_trace(trace)
    check_capacity(trace, fleet)
    I, T = fleet.n_classes, trace.T
    n = 3 * I * T
    x = lambda i, t: i * T + t
    xp = lambda i, t: I * T + i * T + t
    xm = lambda i, t: 2 * I * T + i * T + t
    rows = _RowBuilder()
    for t in range(T):
        rows.add({x(i, t): fleet.capacities[i] for i in range(I)}, ">",
                 float(trace.demands[t]), f"demand[{t + 1}]")
    for i in range(I):
        for t in range(T):
            bal = {x(i, t): 1.0, xp(i, t): -1.0, xm(i, t): 1.0}
            if t > 0:
                bal[x(i, t - 1)] = -1.0
            rows.add(bal, "=", 0.0, f"balance[{i + 1},{t + 1}]")
            rows.add({xp(i, t): 1.0, xm(i, t): 1.0}, "<", 1.0,
                     f"exclusive[{i + 1},{t + 1}]")
    return MilpInstance(
        names=_var_names(fleet, T),
        c=_objective(fleet, trace),
        lb=np.zeros(n),
        ub=np.ones(n),
        integer=np.ones(n, dtype=bool),
        A=rows.matrix(n),
        sense=np.array(rows.sense),
        rhs=np.array(rows.rhs),
        row_names=tuple(rows.names),
        model="het",
        meta={"T": T, "K": I, "I": I, "J": I,
              "identical_pairs": tuple(
                  i for i in range(I - 1)
                  if fleet.capacities[i] == fleet.capacities[i + 1]
                  and fleet.costs[i] == fleet.costs[i + 1])},
    )


BUILDERS = {"hom": build_hom, "het": build_het, "hh": build_hh}
MODEL_KIND = {"hom": "homogeneous", "het": "heterogeneous", "hh": "clustered"}


def build(model: str, trace, fleet: FleetSpec) -> MilpInstance:
    try:
        builder = BUILDERS[model]
    except KeyError:
        raise ValueError(f"unknown model {model!r}; expected hom, het or hh") from None
    return builder(trace, fleet.as_kind(MODEL_KIND[model]))


@dataclass(frozen=True, eq=False)
class Schedule:
    """Running servers per class and slot, shape ``(K, T)``."""

    running: np.ndarray
    fleet: FleetSpec
    trace: WorkloadTrace

    def __post_init__(self):
        r = np.asarray(self.running)
        if r.ndim == 1:
            r = r[None, :]
        if r.size and not np.all(r == np.round(r)):
            raise ValueError("running counts must be integers")
        r = np.round(r).astype(np.int64)
        K, T = self.fleet.n_classes, self.trace.T
        if r.shape != (K, T):
            raise ValueError(f"schedule shape {r.shape} does not match fleet/trace ({K}, {T})")
        counts = np.array(self.fleet.counts)[:, None]
        if np.any(r < 0) or np.any(r > counts):
            raise ValueError("running counts must lie within [0, class size]")
        r.setflags(write=False)
        object.__setattr__(self, "running", r)

    @property
    def T(self) -> int:
        return self.trace.T

    @property
    def deltas(self) -> np.ndarray:
        prev = np.zeros((self.running.shape[0], 1), dtype=np.int64)
        return np.diff(np.hstack([prev, self.running]), axis=1)

    @property
    def switched_on(self) -> np.ndarray:
        return np.maximum(self.deltas, 0)

    @property
    def switched_off(self) -> np.ndarray:
        return np.maximum(-self.deltas, 0)

    @property
    def total_running(self) -> np.ndarray:
        return self.running.sum(axis=0)

    @property
    def provided_capacity(self) -> np.ndarray:
        caps = np.array(self.fleet.capacities)[:, None]
        return (caps * self.running).sum(axis=0)

    def shortfall(self, demands=None) -> np.ndarray:
        d = self.trace.demands if demands is None else np.asarray(demands, dtype=float)
        return np.maximum(d - self.provided_capacity, 0.0)

    def covers(self, demands=None) -> bool:
        return bool(np.all(self.shortfall(demands) <= FEAS_TOL))

    def as_vector(self) -> np.ndarray:
        """Values in the shared three-block variable layout."""
        return np.concatenate([self.running.reshape(-1), self.switched_on.reshape(-1),
                               self.switched_off.reshape(-1)]).astype(float)


def decode(x, trace, fleet: FleetSpec) -> Schedule:
    trace = as_trace(trace)
    K, T = fleet.n_classes, trace.T
    x = np.asarray(x, dtype=float)
    if x.shape != (3 * K * T,):
        raise ValueError("solution vector does not match fleet and trace")
    return Schedule(np.round(x[:K * T]).reshape(K, T), fleet, trace)


@dataclass(frozen=True)
class CostBreakdown:
    """Cost totals in cents.

    ``Fp`` is energy (running, switching power, consolidation power), ``Fw``
    is wear-and-tear, ``F = Fp + Fw``.  ``switch_cost`` is everything caused by
    switching, so ``F - switch_cost`` is the pure running energy.
    """

    F: float
    Fp: float
    Fw: float
    switch_cost: float
    running_energy: float


def evaluate_cost(schedule: Schedule, fleet: FleetSpec | None = None) -> CostBreakdown:
    fleet = fleet or schedule.fleet
    if fleet.n_classes != schedule.running.shape[0]:
        raise ValueError("schedule does not match fleet shape")
    sizes = schedule.trace.slot_sizes
    run_slots = schedule.running @ sizes
    ons = schedule.switched_on.sum(axis=1)
    offs = schedule.switched_off.sum(axis=1)
    run = p = w = Fraction(0)
    for k, c in enumerate(fleet.costs):
        c = c.exact()
        run += c.run_cost_per_base_slot * int(run_slots[k])
        p += c.switch_on_power * int(ons[k]) + c.switch_off_power_total * int(offs[k])
        w += c.switch_on_wear * int(ons[k]) + c.switch_off_wear * int(offs[k])
    return CostBreakdown(F=float(run + p + w), Fp=float(run + p), Fw=float(w),
                         switch_cost=float(p + w), running_energy=float(run))


def fixed_configuration(trace, fleet: FleetSpec) -> Schedule:
    """Every server on in every slot."""
    trace = as_trace(trace)
    check_capacity(trace, fleet)
    running = np.repeat(np.array(fleet.counts)[:, None], trace.T, axis=1)
    return Schedule(running, fleet, trace)


def _cover_table(fleet: FleetSpec):
    """All per-class count vectors, sorted by capacity, with suffix-min costs."""
    ranges = [range(n + 1) for n in fleet.counts]
    combos = np.array(list(itertools.product(*ranges)), dtype=np.int64)
    caps = combos @ np.array(fleet.capacities)
    run = np.array([float(c.run_cost_per_base_slot) for c in fleet.costs])
    costs = combos @ run
    order = np.lexsort((np.arange(len(caps)), costs, caps))
    return combos[order], caps[order], costs[order]


def _greedy_cover(demand, fleet: FleetSpec, order):
    counts = np.zeros(fleet.n_classes, dtype=np.int64)
    remaining = demand
    for k in order:
        if remaining <= FEAS_TOL:
            break
        take = min(fleet.counts[k], min_servers(remaining, fleet.capacities[k]))
        counts[k] = take
        remaining -= take * fleet.capacities[k]
    return counts


def local_optimum(trace, fleet: FleetSpec) -> Schedule:
    """Cheapest running set per slot, ignoring switching costs."""
    trace = as_trace(trace)
    check_capacity(trace, fleet)
    K, T = fleet.n_classes, trace.T
    running = np.zeros((K, T), dtype=np.int64)
    if K == 1:
        running[0] = [min_servers(d, fleet.capacities[0]) for d in trace.demands]
    elif fleet.total_servers < EXACT_COVER_LIMIT:
        combos, caps, costs = _cover_table(fleet)
        # suffix minimum: cheapest vector with capacity >= caps[i]; first index wins ties
        best = np.empty(len(costs), dtype=np.int64)
        cur = len(costs) - 1
        for i in range(len(costs) - 1, -1, -1):
            if costs[i] <= costs[cur]:
                cur = i
            best[i] = cur
        for t, d in enumerate(trace.demands):
            i = int(np.searchsorted(caps, d - FEAS_TOL, side="left"))
            running[:, t] = combos[best[i]]
    else:
        ratio = [float(c.run_cost_per_base_slot) / v
                 for c, v in zip(fleet.costs, fleet.capacities)]
        order = sorted(range(K), key=lambda k: (ratio[k], k))
        for t, d in enumerate(trace.demands):
            running[:, t] = _greedy_cover(d, fleet, order)
    sched = Schedule(running, fleet, trace)
    if not sched.covers():
        t = int(np.flatnonzero(sched.shortfall() > FEAS_TOL)[0])
        raise InfeasibleDemand(t + 1, float(trace.demands[t]), fleet.total_capacity)
    return sched
