"""Workload traces: generation, truncation and CSV round-tripping.

Demands are expressed in normalized server-capacity units (a server of
capacity 1 serves one unit).  Random traces are drawn with numpy's PCG64
bit generator seeded through ``numpy.random.SeedSequence(seed)``; two
different integer seeds give statistically independent streams, so a list
of seeds ``0..100`` yields 101 independent workloads on every platform.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

DISTRIBUTIONS = ("erlang2", "exponential", "hyperexp2")

# Target squared coefficient of variation of the bursty generator.
HYPEREXP_SCV = 4.0


class TraceError(ValueError):
    """Raised for malformed or invalid trace data."""


@dataclass(frozen=True, eq=False)
class WorkloadTrace:
    demands: np.ndarray
    slot_sizes: np.ndarray = field(default=None)  # type: ignore[assignment]
    base_slot_minutes: float = 5.0

    def __post_init__(self):
        d = np.array(self.demands, dtype=float).reshape(-1)
        if d.size < 1:
            raise TraceError("trace must contain at least one slot")
        if self.slot_sizes is None:
            s = np.ones(d.size, dtype=np.int64)
        else:
            s = np.array(self.slot_sizes).reshape(-1)
            if s.size and not np.all(s == np.round(s)):
                raise TraceError("slot sizes must be integers")
            s = s.astype(np.int64)
        if s.size != d.size:
            raise TraceError(
                f"{d.size} demands but {s.size} slot sizes")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            bad = int(np.flatnonzero(~(d >= 0))[0]) + 1
            raise TraceError(f"slot {bad}: demand must be a finite value >= 0")
        if np.any(s < 1):
            bad = int(np.flatnonzero(s < 1)[0]) + 1
            raise TraceError(f"slot {bad}: slot size must be >= 1")
        if not self.base_slot_minutes > 0:
            raise TraceError("base_slot_minutes must be positive")
        d.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "demands", d)
        object.__setattr__(self, "slot_sizes", s)

    @property
    def T(self) -> int:
        return int(self.demands.size)

    @property
    def horizon_base_slots(self) -> int:
        return int(self.slot_sizes.sum())

    def __len__(self):
        return self.T

    def __eq__(self, other):
        if not isinstance(other, WorkloadTrace):
            return NotImplemented
        return (np.array_equal(self.demands, other.demands)
                and np.array_equal(self.slot_sizes, other.slot_sizes)
                and self.base_slot_minutes == other.base_slot_minutes)

    def __hash__(self):
        return hash((self.demands.tobytes(), self.slot_sizes.tobytes(),
                     self.base_slot_minutes))

    def allclose(self, other: "WorkloadTrace", rtol: float = 1e-9) -> bool:
        return (self.T == other.T
                and np.allclose(self.demands, other.demands, rtol=rtol, atol=0)
                and np.array_equal(self.slot_sizes, other.slot_sizes))

    def stats(self) -> dict:
        d = self.demands
        mean = float(d.mean())
        var = float(d.var())
        return {
            "T": self.T,
            "mean": mean,
            "max": float(d.max()),
            "min": float(d.min()),
            "scv": var / mean ** 2 if mean > 0 else float("nan"),
        }


@dataclass(frozen=True)
class RandomWorkloadSpec:
    distribution: str
    mean: float
    T: int
    seed: int = 0
    scv: float = HYPEREXP_SCV  # only used by hyperexp2

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise ValueError(
                f"unknown distribution {self.distribution!r}; "
                f"expected one of {', '.join(DISTRIBUTIONS)}")
        if not self.mean > 0:
            raise ValueError("mean must be positive")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.distribution == "hyperexp2" and not self.scv > 1:
            raise ValueError("hyper-exponential SCV must exceed 1")


def gen_sinusoidal(I: int, T: int = 96, grid: str = "index") -> WorkloadTrace:
    """Deterministic 8-hour sinusoid covering 0..120 degrees, mean 0.2*I.

    ``grid="index"`` samples the angle at t*120/T degrees for t = 1..T.
    ``grid="linspace"`` samples T evenly spaced angles from 0 to 120 degrees
    inclusive (the Matlab ``linspace`` convention), which reproduces the
    published sinusoidal baseline figures exactly.
    """
    if I < 1 or T < 1:
        raise ValueError("I and T must be >= 1")
    if grid == "index":
        angles = np.arange(1, T + 1) * 2.0 * np.pi / 3.0 / T
    elif grid == "linspace":
        angles = np.linspace(0.0, 2.0 * np.pi / 3.0, T)
    else:
        raise ValueError(f"unknown sinusoid grid {grid!r}")
    raw = np.sin(angles)
    # sin(0..120 deg) lies in [0, 1], so demands are never negative
    return WorkloadTrace((raw - raw.sum() / T + 1.0) * 0.2 * I)


def hyperexp2_params(mean: float, scv: float = HYPEREXP_SCV):
    """Balanced-means two-phase hyper-exponential fit.

    Returns ``(p1, p2, m1, m2)`` with p1*m1 == p2*m2 == mean/2 and overall
    squared coefficient of variation ``scv``.  For scv=4 the branch
    probabilities are (1 +- sqrt(3/5))/2.
    """
    r = math.sqrt((scv - 1.0) / (scv + 1.0))
    p1 = (1.0 + r) / 2.0
    p2 = (1.0 - r) / 2.0
    return p1, p2, mean / (2.0 * p1), mean / (2.0 * p2)


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def gen_random(spec: RandomWorkloadSpec) -> WorkloadTrace:
    rng = rng_for(spec.seed)
    n, m = spec.T, spec.mean
    if spec.distribution == "exponential":
        d = rng.exponential(m, n)
    elif spec.distribution == "erlang2":
        d = rng.exponential(m / 2.0, n) + rng.exponential(m / 2.0, n)
    else:
        p1, _, m1, m2 = hyperexp2_params(m, spec.scv)
        first = rng.random(n) < p1
        d = rng.exponential(1.0, n) * np.where(first, m1, m2)
    return WorkloadTrace(d)


def truncate_to_capacity(trace: WorkloadTrace, cap: float) -> WorkloadTrace:
    if not cap > 0:
        raise ValueError("cap must be positive")
    return WorkloadTrace(np.minimum(trace.demands, cap), trace.slot_sizes,
                         trace.base_slot_minutes)


def experiment_workload(kind: str, I: int, T: int = 96, seed: int = 0,
                        utilization: float = 0.2,
                        sinusoid_grid: str = "index") -> WorkloadTrace:
    """One of the four experiment workloads, truncated at fleet size ``I``."""
    if kind == "sinusoidal":
        return gen_sinusoidal(I, T, grid=sinusoid_grid)
    spec = RandomWorkloadSpec(kind, utilization * I, T, seed)
    return truncate_to_capacity(gen_random(spec), I)


def save_trace(trace: WorkloadTrace, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["slot", "demand", "slot_size"])
        for t, (d, s) in enumerate(zip(trace.demands, trace.slot_sizes), 1):
            w.writerow([t, repr(float(d)), int(s)])


def load_trace(path, base_slot_minutes: float = 5.0) -> WorkloadTrace:
    path = Path(path)
    demands: list[float] = []
    sizes: list[int] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TraceError("trace must contain at least one slot")
        header = [h.strip() for h in header]
        if header[:2] != ["slot", "demand"]:
            raise TraceError(
                f"row 1: expected header 'slot,demand,slot_size', got {','.join(header)}")
        has_size = len(header) > 2 and header[2] == "slot_size"
        for row_no, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                d = float(row[1])
                s = int(row[2]) if has_size and len(row) > 2 else 1
            except (IndexError, ValueError):
                raise TraceError(f"row {row_no}: malformed row {row!r}") from None
            if not math.isfinite(d) or d < 0:
                raise TraceError(f"row {row_no}: negative or invalid demand {row[1]!r}")
            if s < 1:
                raise TraceError(f"row {row_no}: slot size must be >= 1, got {s}")
            demands.append(d)
            sizes.append(s)
    if not demands:
        raise TraceError("trace must contain at least one slot")
    return WorkloadTrace(np.array(demands), np.array(sizes, dtype=np.int64),
                         base_slot_minutes)


def as_trace(demands: Sequence[float] | WorkloadTrace) -> WorkloadTrace:
    if isinstance(demands, WorkloadTrace):
        return demands
    return WorkloadTrace(np.asarray(demands, dtype=float))
