"""Experiment sweeps: aggregate, solve, expand and price on the base trace."""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .aggregation import (aggregate, expand_schedule, overprovisioning_cost,
                          rearrangement_amount)
from .config import ExperimentConfig
from .costs import BASE_SLOT_MINUTES, CONFIG_KEYS, beta_cost_params, default_cost_params
from .models import FleetSpec, evaluate_cost, fixed_configuration, local_optimum
from .solver import SolveOptions, solve_model
from .workload import experiment_workload

REPORT_HEADER = ("workload", "seed", "model", "method", "mode", "alpha", "beta",
                 "F", "Fp", "Fw", "switch_cost", "overprov", "rearrange", "status",
                 "wall_ms")
BASELINES = ("fixed", "local", "global")


def cost_params(config: ExperimentConfig, beta=None):
    params = default_cost_params() if beta is None else beta_cost_params(beta)
    if config.slot_minutes != BASE_SLOT_MINUTES:
        scale = config.slot_minutes / BASE_SLOT_MINUTES
        params = replace(params, run_cost_per_base_slot=params.run_cost_per_base_slot * scale)
    overrides = {CONFIG_KEYS[k]: v for k, v in config.cost_overrides.items()}
    return replace(params, **overrides) if overrides else params


def make_fleet(config: ExperimentConfig, beta=None) -> FleetSpec:
    costs = cost_params(config, beta)
    if config.model == "hh":
        return FleetSpec.equal_clusters(config.servers, config.clusters, costs=costs)
    if config.model == "het":
        return FleetSpec.heterogeneous([1.0] * config.servers, costs)
    return FleetSpec.homogeneous(config.servers, costs=costs)


def make_trace(config: ExperimentConfig, seed: int):
    trace = experiment_workload(config.workload, config.servers, config.slots, seed,
                                config.utilization, config.sinusoid_grid)
    if config.slot_minutes != BASE_SLOT_MINUTES:
        trace = replace(trace, base_slot_minutes=config.slot_minutes)
    return trace


def _fmt(v):
    if v is None or v == "":
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def plan_tasks(config: ExperimentConfig):
    """Every row of the sweep as ``(seed, beta, method, mode, alpha)``."""
    tasks = []
    for seed in config.seeds:
        for beta in config.betas:
            if config.baselines:
                tasks += [(seed, beta, b, "", 1) for b in BASELINES]
            for method in config.methods:
                for mode in config.modes:
                    for alpha in config.alphas:
                        tasks.append((seed, beta, method, mode, alpha))
    return tasks


def run_task(config: ExperimentConfig, task) -> dict:
    seed, beta, method, mode, alpha = task
    row = dict.fromkeys(REPORT_HEADER, "")
    row.update(workload=config.workload, seed=seed, model=config.model, method=method,
               mode=mode, alpha=alpha, beta="" if beta is None else beta)
    start = time.perf_counter()
    try:
        trace = make_trace(config, seed)
        fleet = make_fleet(config, beta)
        if method == "fixed":
            sched, status = fixed_configuration(trace, fleet), "ok"
        elif method == "local":
            sched, status = local_optimum(trace, fleet), "ok"
        else:
            if method == "global":
                agg = aggregate(trace, "static", "max", alpha=1)
            else:
                agg = aggregate(trace, method, mode, alpha=alpha, S=config.S)
            options = SolveOptions(time_limit_seconds=config.time_limit,
                                   node_limit=config.node_limit)
            agg_sched, sol = solve_model(agg.as_trace(), fleet, config.model, options)
            status = sol.status
            sched = None if agg_sched is None else expand_schedule(agg_sched, agg)
            if method != "global":
                if agg.mode == "max":
                    row["overprov"] = overprovisioning_cost(agg)
                else:
                    row["rearrange"] = rearrangement_amount(agg)
                if agg.relaxed:
                    status += ";relaxed"
        if sched is not None:
            cost = evaluate_cost(sched)
            row.update(F=cost.F, Fp=cost.Fp, Fw=cost.Fw, switch_cost=cost.switch_cost)
        row["status"] = status
    except Exception as exc:  # recorded per row; the sweep carries on
        row["status"] = f"error: {type(exc).__name__}: {exc}"
    row["wall_ms"] = round((time.perf_counter() - start) * 1000, 3)
    return row


def _run_chunk(args):
    config, task = args
    return run_task(config, task)


def run_sweep(config: ExperimentConfig, jobs: int = 1):
    tasks = plan_tasks(config)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_chunk, [(config, t) for t in tasks]))
    return [run_task(config, t) for t in tasks]


def write_report(rows, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_HEADER)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in REPORT_HEADER])
