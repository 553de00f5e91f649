"""Bounded-variable revised primal simplex.

Rows are brought to ``A x + sigma * s = b`` with one slack per row
(``sigma = -1`` for ``>=`` rows, slack fixed at 0 for equalities).  Phase 1
starts from the slack basis, adding an artificial column only for rows whose
slack cannot absorb the initial residual.  The basis is held as a sparse LU
factorization plus a product-form eta file, refactored periodically.

Pricing is Dantzig's largest reduced cost; after a run of degenerate pivots
the method switches to Bland's smallest-index rule until the objective moves
again, which rules out cycling.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .types import (FEAS_TOL, INFEASIBLE, LIMIT, NUMERICAL, OPTIMAL, UNBOUNDED,
                    Solution)

DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 64
DEGENERATE_STREAK = 30

BASIC, AT_LO, AT_HI, FREE = 0, 1, 2, 3


class NumericalFailure(RuntimeError):
    pass


class _Basis:
    def __init__(self, M: sp.csc_matrix, basic: np.ndarray):
        try:
            self.lu = splu(M[:, basic].tocsc())
        except RuntimeError as exc:  # exactly singular
            raise NumericalFailure(str(exc)) from None
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, v: np.ndarray) -> np.ndarray:
        z = self.lu.solve(v)
        for p, a in self.etas:
            zp = z[p] / a[p]
            z -= a * zp
            z[p] = zp
        return z

    def btran(self, c: np.ndarray) -> np.ndarray:
        w = c.astype(float, copy=True)
        for p, a in reversed(self.etas):
            w[p] = (w[p] - (w @ a - w[p] * a[p])) / a[p]
        return self.lu.solve(w, trans="T")


@dataclass
class StandardForm:
    """``M @ z = b`` over structural columns followed by one slack per row."""

    M: sp.csc_matrix
    MT: sp.csr_matrix
    b: np.ndarray
    cost: np.ndarray
    slack_lo: np.ndarray
    slack_hi: np.ndarray
    n: int
    m: int

    @classmethod
    def from_rows(cls, A, sense, rhs, c) -> "StandardForm":
        A = sp.csr_matrix(A, dtype=float)
        m, n = A.shape
        sigma = np.where(sense == ">", -1.0, 1.0)
        M = sp.hstack([A, sp.diags(sigma, 0, shape=(m, m))], format="csc")
        slack_hi = np.where(sense == "=", 0.0, np.inf)
        return cls(M=M, MT=M.T.tocsr(), b=np.asarray(rhs, dtype=float),
                   cost=np.concatenate([np.asarray(c, dtype=float), np.zeros(m)]),
                   slack_lo=np.zeros(m), slack_hi=slack_hi, n=n, m=m)


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    objective: float
    iterations: int


def _initial_values(lo, hi):
    state = np.full(lo.shape, AT_LO, dtype=np.int8)
    x = lo.copy()
    no_lo = ~np.isfinite(lo)
    state[no_lo & np.isfinite(hi)] = AT_HI
    x[no_lo & np.isfinite(hi)] = hi[no_lo & np.isfinite(hi)]
    free = no_lo & ~np.isfinite(hi)
    state[free] = FREE
    x[free] = 0.0
    return x, state


def simplex(sf: StandardForm, lb: np.ndarray, ub: np.ndarray,
            max_iter: int = 1_000_000, deadline: float | None = None) -> LPResult:
    """Minimize ``sf.cost`` over ``lb <= x <= ub`` (structural bounds only)."""
    n, m = sf.n, sf.m
    lo = np.concatenate([lb, sf.slack_lo])
    hi = np.concatenate([ub, sf.slack_hi])
    x, state = _initial_values(lo, hi)
    residual = sf.b - sf.M @ x
    sigma = sf.M[:, n:].diagonal()
    slack_val = residual * sigma
    slack_ok = (slack_val >= lo[n:] - FEAS_TOL) & (slack_val <= hi[n:] + FEAS_TOL)

    art_rows = np.flatnonzero(~slack_ok)
    k = art_rows.size
    if k:
        signs = np.where(residual[art_rows] >= 0, 1.0, -1.0)
        art = sp.csc_matrix((signs, (art_rows, np.arange(k))), shape=(m, k))
        M = sp.hstack([sf.M, art], format="csc")
        MT = M.T.tocsr()
        lo = np.concatenate([lo, np.zeros(k)])
        hi = np.concatenate([hi, np.full(k, np.inf)])
        x = np.concatenate([x, np.abs(residual[art_rows])])
        state = np.concatenate([state, np.full(k, BASIC, dtype=np.int8)])
    else:
        M, MT = sf.M, sf.MT
    ntot = M.shape[1]

    basic = n + np.arange(m)
    ok_rows = np.flatnonzero(slack_ok)
    x[n + ok_rows] = np.clip(slack_val[ok_rows], lo[n + ok_rows], hi[n + ok_rows])
    state[n + ok_rows] = BASIC
    if k:
        basic[art_rows] = n + m + np.arange(k)

    it = 0
    try:
        basis = _Basis(M, basic)
        if k:
            phase1 = np.zeros(ntot)
            phase1[n + m:] = 1.0
            status, it, basis = _iterate(M, MT, sf.b, phase1, lo, hi, x, state, basic,
                                         basis, it, max_iter, deadline)
            if status != OPTIMAL:
                return LPResult(status, None, float("nan"), it)
            infeas = x[n + m:].sum()
            if infeas > FEAS_TOL * max(1.0, np.abs(sf.b).max(initial=0.0)):
                return LPResult(INFEASIBLE, None, float("nan"), it)
            hi[n + m:] = 0.0
            nonbasic_art = (state[n + m:] != BASIC)
            state[n + m:][nonbasic_art] = AT_LO
        cost = np.zeros(ntot)
        cost[:n + m] = sf.cost
        status, it, basis = _iterate(M, MT, sf.b, cost, lo, hi, x, state, basic,
                                     basis, it, max_iter, deadline)
    except NumericalFailure:
        return LPResult(NUMERICAL, None, float("nan"), it)
    if status != OPTIMAL:
        return LPResult(status, None, float("nan"), it)
    xs = x[:n].copy()
    # snap values sitting within tolerance of a bound
    near_lo = np.abs(xs - lb) <= FEAS_TOL
    near_hi = np.abs(xs - ub) <= FEAS_TOL
    xs[near_lo] = lb[near_lo]
    xs[near_hi] = ub[near_hi]
    return LPResult(OPTIMAL, xs, float(sf.cost[:n] @ xs), it)


def _recompute_basics(M, b, x, basic, basis):
    nb = np.ones(M.shape[1], dtype=bool)
    nb[basic] = False
    rhs = b - M[:, nb] @ x[nb]
    x[basic] = basis.ftran(rhs)


def _iterate(M, MT, b, cost, lo, hi, x, state, basic, basis, it, max_iter, deadline):
    streak = 0
    width = hi - lo
    movable = width > 0
    while True:
        if it >= max_iter or (deadline is not None and time.perf_counter() > deadline):
            return LIMIT, it, basis
        y = basis.btran(cost[basic])
        d = cost - MT @ y
        elig = np.zeros(d.shape, dtype=bool)
        elig |= (state == AT_LO) & (d < -DUAL_TOL) & movable
        elig |= (state == AT_HI) & (d > DUAL_TOL) & movable
        elig |= (state == FREE) & (np.abs(d) > DUAL_TOL)
        cand = np.flatnonzero(elig)
        if cand.size == 0:
            return OPTIMAL, it, basis
        bland = streak >= DEGENERATE_STREAK
        if bland:
            q = int(cand[0])
        else:
            q = int(cand[np.argmax(np.abs(d[cand]))])
        if state[q] == AT_LO:
            direction = 1.0
        elif state[q] == AT_HI:
            direction = -1.0
        else:
            direction = -np.sign(d[q])

        col = M[:, q].toarray().ravel()
        alpha = basis.ftran(col)
        delta = direction * alpha
        xb = x[basic]
        lob, hib = lo[basic], hi[basic]
        ratios = np.full(delta.shape, np.inf)
        dec = delta > PIVOT_TOL
        inc = delta < -PIVOT_TOL
        with np.errstate(invalid="ignore"):
            ratios[dec] = (xb[dec] - lob[dec]) / delta[dec]
            ratios[inc] = (hib[inc] - xb[inc]) / -delta[inc]
        ratios = np.where(np.isnan(ratios), np.inf, np.maximum(ratios, 0.0))
        theta_b = ratios.min(initial=np.inf)
        theta_flip = width[q]

        if theta_flip <= theta_b:
            if not np.isfinite(theta_flip):
                return UNBOUNDED, it, basis
            theta = theta_flip
            x[q] = hi[q] if direction > 0 else lo[q]
            x[basic] = xb - theta * delta
            state[q] = AT_HI if direction > 0 else AT_LO
            it += 1
            streak = 0 if theta > 1e-12 else streak + 1
            continue

        theta = theta_b
        ties = np.flatnonzero(ratios <= theta + 1e-12)
        if bland:
            p = int(ties[np.argmin(basic[ties])])
        else:
            p = int(ties[np.argmax(np.abs(delta[ties]))])
        leaving = basic[p]
        x[q] += direction * theta
        x[basic] = xb - theta * delta
        if delta[p] > 0:
            x[leaving] = lo[leaving]
            state[leaving] = AT_LO
        else:
            x[leaving] = hi[leaving]
            state[leaving] = AT_HI
        basic[p] = q
        state[q] = BASIC
        basis.etas.append((p, alpha))
        it += 1
        streak = 0 if theta > 1e-12 else streak + 1
        if len(basis.etas) >= REFACTOR_EVERY:
            basis = _Basis(M, basic)
            _recompute_basics(M, b, x, basic, basis)


def solve_lp(instance, lb=None, ub=None, max_iter: int = 1_000_000) -> Solution:
    """Solve the linear relaxation of ``instance`` (integrality ignored)."""
    start = time.perf_counter()
    sf = StandardForm.from_rows(instance.A, instance.sense, instance.rhs, instance.c)
    lb = instance.lb if lb is None else np.asarray(lb, dtype=float)
    ub = instance.ub if ub is None else np.asarray(ub, dtype=float)
    res = simplex(sf, lb, ub, max_iter=max_iter)
    sol = Solution(status=res.status, names=instance.names, lp_iterations=res.iterations)
    if res.status == OPTIMAL:
        sol.x = res.x
        sol.objective = res.objective
        sol.bound = res.objective
    sol.wall_time = time.perf_counter() - start
    return sol
