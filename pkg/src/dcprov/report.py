"""Summaries of sweep reports: per-case means, 95% intervals, savings."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from pathlib import Path

import numpy as np
from scipy import stats

from .sweep import REPORT_HEADER

CASE_KEYS = ("workload", "model", "method", "mode", "alpha", "beta")


class ReportError(ValueError):
    pass


def read_report(path) -> list[dict]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        missing = [k for k in REPORT_HEADER if k not in reader.fieldnames]
        if missing:
            raise ReportError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = []
        for n, row in enumerate(reader, 2):
            for k in ("F", "Fp", "Fw", "switch_cost"):
                if row[k]:
                    try:
                        row[k] = float(row[k])
                    except ValueError:
                        raise ReportError(f"{path}: row {n}: bad {k} value {row[k]!r}") from None
            rows.append(row)
    return rows


def mean_ci(values, confidence: float = 0.95):
    """Mean and Student-t half-width; the half-width is 0 for one sample."""
    x = np.asarray(values, dtype=float)
    n = len(x)
    if n == 0:
        return math.nan, math.nan
    m = float(x.mean())
    if n == 1:
        return m, 0.0
    half = stats.t.ppf(0.5 + confidence / 2, n - 1) * x.std(ddof=1) / math.sqrt(n)
    return m, float(half)


def summarize(rows):
    """One record per case, with savings relative to the fixed configuration."""
    groups = defaultdict(list)
    for row in rows:
        groups[tuple(row[k] for k in CASE_KEYS)].append(row)
    fixed = {}
    out = []
    for key, members in groups.items():
        ok = [r for r in members if isinstance(r["F"], float)]
        rec = dict(zip(CASE_KEYS, key))
        rec["n"] = len(ok)
        rec["failed"] = len(members) - len(ok)
        for k in ("F", "Fp", "Fw", "switch_cost"):
            rec[k], rec[k + "_ci"] = mean_ci([r[k] for r in ok])
        out.append(rec)
        if rec["method"] == "fixed":
            fixed[(rec["workload"], rec["model"], rec["beta"])] = rec["F"]
    for rec in out:
        base = fixed.get((rec["workload"], rec["model"], rec["beta"]))
        rec["ratio"] = rec["F"] / base if base else math.nan
        rec["savings"] = 1.0 - rec["ratio"] if base else math.nan
    return out


def _num(v, ci=None):
    if isinstance(v, float) and math.isnan(v):
        return "-"
    return f"{v:.4f}" if ci is None else f"{v:.4f} ± {ci:.4f}"


def format_summary(rows) -> str:
    if not rows:
        return "no rows"
    recs = summarize(rows)
    head = ["workload", "model", "method", "mode", "alpha", "beta", "n",
            "F", "Fp", "Fw", "switch_cost", "F/fixed", "savings"]
    table = [head]
    for r in recs:
        table.append([r["workload"], r["model"], r["method"], r["mode"] or "-",
                      r["alpha"], r["beta"] or "-",
                      f"{r['n']}" + (f" ({r['failed']} failed)" if r["failed"] else ""),
                      _num(r["F"], r["F_ci"]), _num(r["Fp"], r["Fp_ci"]),
                      _num(r["Fw"], r["Fw_ci"]), _num(r["switch_cost"], r["switch_cost_ci"]),
                      _num(r["ratio"]), _num(r["savings"])])
    widths = [max(len(str(row[i])) for row in table) for i in range(len(head))]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip() for row in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
