from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT = "limit_reached"
NUMERICAL = "numerical_failure"

INT_TOL = 1e-9
FEAS_TOL = 1e-9


class SearchSpaceTooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveOptions:
    absolute_gap_tolerance: float = 1e-6
    time_limit_seconds: Optional[float] = None
    node_limit: Optional[int] = None
    # Het only: order identical servers x[i,t] >= x[i+1,t] (off by default).
    symmetry_breaking: bool = False

    def __post_init__(self):
        if not self.absolute_gap_tolerance > 0:
            raise ValueError("gap tolerance must be positive")
        if self.time_limit_seconds is not None and not self.time_limit_seconds > 0:
            raise ValueError("time limit must be positive")
        if self.node_limit is not None and self.node_limit < 1:
            raise ValueError("node limit must be >= 1")


@dataclass
class Solution:
    status: str
    objective: float = float("nan")
    x: Optional[np.ndarray] = None
    names: tuple = ()
    nodes: int = 0
    lp_iterations: int = 0
    wall_time: float = 0.0
    bound: float = float("nan")
    extra: dict = field(default_factory=dict)

    @property
    def values(self) -> dict:
        if self.x is None:
            return {}
        return dict(zip(self.names, self.x.tolist()))

    @property
    def gap(self) -> float:
        return self.objective - self.bound

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL
