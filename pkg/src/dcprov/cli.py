"""``dcprov`` command line: gen, solve, aggregate, sweep, report."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import __version__
from .aggregation import (METHODS, MODES, aggregate, expand_schedule,
                          overprovisioning_cost, rearrangement_amount,
                          save_aggregated, strict_objective)
from .config import MODELS, PRESETS, WORKLOADS, ExperimentConfig, apply_settings, load_config
from .costs import read_key_value
from .models import (FleetSpec, InfeasibleDemand, evaluate_cost, fixed_configuration,
                     local_optimum)
from .report import ReportError, format_summary, read_report
from .solver import STATS_HEADER, SolveOptions, solve_model, stats_row
from .sweep import cost_params, run_sweep, write_report
from .workload import TraceError, load_trace, experiment_workload, save_trace


class CliError(Exception):
    pass


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _config_from(args) -> ExperimentConfig:
    config = PRESETS[args.preset] if getattr(args, "preset", None) else ExperimentConfig()
    if getattr(args, "config", None):
        config = load_config(args.config, config)
    settings = {}
    for flag, key in (("model", "model"), ("method", "methods"), ("mode", "modes"),
                      ("alpha", "alphas"), ("beta", "betas"), ("seeds", "seeds"),
                      ("slot_minutes", "slot_minutes"), ("workload", "workload"),
                      ("servers", "servers"), ("clusters", "clusters"), ("slots", "slots")):
        value = getattr(args, flag, None)
        if value is not None:
            settings[key] = str(value)
    return apply_settings(config, settings)


def cmd_gen(args):
    T = args.slots or round(8 * 60 / args.slot_minutes)
    trace = experiment_workload(args.workload, args.servers, T, args.seed,
                                args.utilization, args.grid)
    out = Path(args.out)
    if out.is_dir() or args.out.endswith(("/", "\\")):
        out = out / f"{args.workload}_I{args.servers}_T{T}_s{args.seed}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_trace(trace, out)
    s = trace.stats()
    print(f"wrote {out} ({trace.T} slots)")
    print(f"mean {s['mean']:.4f}  max {s['max']:.4f}  min {s['min']:.4f}  scv {s['scv']:.4f}")


def _fleet(args, costs):
    I = args.servers
    if args.model == "hom":
        return FleetSpec.homogeneous(I, args.capacity, costs)
    if args.model == "het":
        caps = _float_list(args.capacities) if args.capacities else [args.capacity] * I
        return FleetSpec.heterogeneous(caps, costs)
    if args.capacities:
        caps = _float_list(args.capacities)
        counts = [int(c) for c in args.counts.split(",")] if args.counts else None
        if counts is None:
            raise CliError("--capacities for hh needs --counts")
        return FleetSpec.clustered(caps, counts, costs)
    return FleetSpec.equal_clusters(I, args.clusters, args.capacity, costs)


def cmd_solve(args):
    trace = load_trace(args.trace, args.slot_minutes)
    config = ExperimentConfig(slot_minutes=args.slot_minutes)
    if args.config:
        config = load_config(args.config, config)
    beta = args.beta
    if beta is None and args.config:
        kv = read_key_value(args.config)
        beta = float(kv["beta"]) if "beta" in kv else None
    fleet = _fleet(args, cost_params(config, beta))
    agg = aggregate(trace, args.method, args.mode, alpha=args.alpha, S=args.S)
    options = SolveOptions(time_limit_seconds=args.time_limit, node_limit=args.node_limit,
                           symmetry_breaking=args.symmetry_breaking)
    agg_sched, sol = solve_model(agg.as_trace(), fleet, args.model, options, args.solver)
    out = Path(args.out)
    stats = stats_row(args.model, trace, fleet, args.alpha, sol)
    _write_csv(out / "stats.csv", STATS_HEADER, [[stats[k] for k in STATS_HEADER]])
    if agg_sched is None:
        raise CliError(f"solver finished with status {sol.status}; no schedule written")
    sched = expand_schedule(agg_sched, agg)
    id_col = {"hh": "cluster_id", "het": "server_id"}.get(args.model)
    rows = []
    for k in range(sched.running.shape[0]):
        for t in range(sched.T):
            row = [t + 1, int(sched.running[k, t])] + ([k + 1] if id_col else [])
            rows.append(row + [int(sched.switched_on[k, t]), int(sched.switched_off[k, t])])
    header = ["slot", "running"] + ([id_col] if id_col else []) + ["switched_on", "switched_off"]
    _write_csv(out / "schedule.csv", header, rows)
    costs = [("solved", evaluate_cost(sched))]
    if args.baselines:
        costs.append(("fixed", evaluate_cost(fixed_configuration(trace, sched.fleet))))
        costs.append(("local", evaluate_cost(local_optimum(trace, sched.fleet))))
    _write_csv(out / "cost.csv", ["case", "F", "Fp", "Fw", "switch_cost"],
               [[name, repr(c.F), repr(c.Fp), repr(c.Fw), repr(c.switch_cost)]
                for name, c in costs])
    print(f"status {sol.status}  objective {sol.objective:.4f}  nodes {sol.nodes}  "
          f"lp_iters {sol.lp_iterations}  wall_ms {stats['wall_ms']}")
    for name, c in costs:
        print(f"{name:<7} F {c.F:.4f}  Fp {c.Fp:.4f}  Fw {c.Fw:.4f}  switch {c.switch_cost:.4f}")
    print(f"wrote {out / 'schedule.csv'}, {out / 'cost.csv'}, {out / 'stats.csv'}")


def cmd_aggregate(args):
    trace = load_trace(args.trace, args.slot_minutes)
    if (args.alpha is None) == (args.t_hat is None):
        raise CliError("give exactly one of --alpha and --t-hat")
    agg = aggregate(trace, args.method, args.mode, alpha=args.alpha, T_hat=args.t_hat, S=args.S)
    out = Path(args.out)
    if out.is_dir() or args.out.endswith(("/", "\\")):
        out = out / "aggregated.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_aggregated(agg, out)
    if agg.mode == "max":
        metric = ("overprovisioning", overprovisioning_cost(agg))
    else:
        metric = ("rearrangement", rearrangement_amount(agg))
    print(f"wrote {out} ({agg.T_hat} slots from {trace.T}, alpha {agg.alpha})")
    print(f"{metric[0]} {metric[1]:.6g}  strict_objective {strict_objective(agg):.6g}")
    if agg.relaxed:
        print("note: size bound S stopped merging early (relaxed target)")


def cmd_sweep(args):
    config = _config_from(args)
    rows = run_sweep(config, jobs=args.jobs)
    out = Path(args.out)
    path = out / "report.csv" if out.suffix != ".csv" else out
    write_report(rows, path)
    failed = sum(1 for r in rows if str(r["status"]).startswith("error"))
    print(f"wrote {path} ({len(rows)} rows, {failed} failed)")


def cmd_report(args):
    print(format_summary(read_report(args.report)))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dcprov", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a workload trace CSV")
    g.add_argument("workload", choices=WORKLOADS)
    g.add_argument("--servers", "-I", type=int, default=100)
    g.add_argument("--slots", "-T", type=int, default=None,
                   help="default: an 8-hour horizon at --slot-minutes")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--utilization", type=float, default=0.2)
    g.add_argument("--grid", choices=("index", "linspace"), default="index",
                   help="sinusoid sampling grid")
    g.add_argument("--slot-minutes", type=float, default=5.0)
    g.add_argument("--out", default=".")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve one trace, write schedule/cost/stats CSVs")
    s.add_argument("trace")
    s.add_argument("--model", choices=MODELS, default="hom")
    s.add_argument("--servers", "-I", type=int, default=100)
    s.add_argument("--clusters", "-J", type=int, default=1)
    s.add_argument("--capacity", type=float, default=1.0)
    s.add_argument("--capacities", help="comma list (het: per server, hh: per cluster)")
    s.add_argument("--counts", help="comma list of cluster sizes for hh")
    s.add_argument("--solver", choices=("auto", "dp", "bnb", "brute"), default="auto")
    s.add_argument("--method", choices=METHODS, default="static")
    s.add_argument("--mode", choices=MODES, default="max")
    s.add_argument("--alpha", type=int, default=1)
    s.add_argument("--S", type=int, default=None)
    s.add_argument("--beta", type=float, default=None)
    s.add_argument("--slot-minutes", type=float, default=5.0)
    s.add_argument("--config")
    s.add_argument("--time-limit", type=float, default=None)
    s.add_argument("--node-limit", type=int, default=None)
    s.add_argument("--symmetry-breaking", action="store_true")
    s.add_argument("--no-baselines", dest="baselines", action="store_false")
    s.add_argument("--out", default=".")
    s.set_defaults(func=cmd_solve)

    a = sub.add_parser("aggregate", help="aggregate a trace and report its price")
    a.add_argument("trace")
    a.add_argument("--method", choices=METHODS, default="static")
    a.add_argument("--mode", choices=MODES, default="max")
    a.add_argument("--alpha", type=int)
    a.add_argument("--t-hat", type=int)
    a.add_argument("--S", type=int, default=None)
    a.add_argument("--slot-minutes", type=float, default=5.0)
    a.add_argument("--out", default="aggregated.csv")
    a.set_defaults(func=cmd_aggregate)

    w = sub.add_parser("sweep", help="run an experiment grid, write report.csv")
    w.add_argument("--preset", choices=sorted(PRESETS))
    w.add_argument("--config")
    w.add_argument("--workload", choices=WORKLOADS)
    w.add_argument("--servers", "-I", type=int)
    w.add_argument("--clusters", "-J", type=int)
    w.add_argument("--slots", "-T", type=int)
    w.add_argument("--model", choices=MODELS)
    w.add_argument("--method", help="comma list of aggregation methods")
    w.add_argument("--mode", help="comma list of max/mean")
    w.add_argument("--alpha", help="comma list, e.g. 1,2,3,6,8,12")
    w.add_argument("--beta", help="comma list in [0,1]")
    w.add_argument("--seeds", help="comma list or inclusive range like 0-10")
    w.add_argument("--slot-minutes", type=float)
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--out", default="results")
    w.set_defaults(func=cmd_sweep)

    r = sub.add_parser("report", help="summarize a report CSV")
    r.add_argument("report")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (CliError, TraceError, InfeasibleDemand, ReportError, ValueError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
