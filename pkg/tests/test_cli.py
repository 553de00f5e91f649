import csv
import hashlib

import pytest

from dcprov.cli import main
from dcprov.config import ExperimentConfig, PRESETS, apply_settings, load_config
from dcprov.report import mean_ci, read_report, ReportError
from dcprov.sweep import REPORT_HEADER, run_sweep, write_report


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_gen_sinusoid(tmp_path, capsys):
    out = tmp_path / "sin.csv"
    assert main(["gen", "sinusoidal", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == ["slot", "demand", "slot_size"] and len(rows) == 97
    assert "mean 20.0000" in capsys.readouterr().out


def test_gen_is_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["gen", "exponential", "--seed", "5", "--out", str(a)])
    main(["gen", "exponential", "--seed", "5", "--out", str(b)])
    assert hashlib.sha256(a.read_bytes()).digest() == hashlib.sha256(b.read_bytes()).digest()


def test_gen_into_new_directory(tmp_path):
    assert main(["gen", "erlang2", "--seed", "2", "--out", f"{tmp_path / 'new'}/"]) == 0
    assert (tmp_path / "new" / "erlang2_I100_T96_s2.csv").is_file()


def test_gen_unknown_workload():
    with pytest.raises(SystemExit) as err:
        main(["gen", "weibull"])
    assert err.value.code == 2


def test_solve_hom_and_hh(tmp_path, capsys):
    trace = tmp_path / "sin.csv"
    main(["gen", "sinusoidal", "--grid", "linspace", "--out", str(trace)])
    assert main(["solve", str(trace), "--out", str(tmp_path / "hom")]) == 0
    cost = _rows(tmp_path / "hom" / "cost.csv")
    assert cost[0] == ["case", "F", "Fp", "Fw", "switch_cost"]
    assert float(cost[1][1]) == pytest.approx(123.5017, abs=1e-4)
    sched = _rows(tmp_path / "hom" / "schedule.csv")
    assert sched[0] == ["slot", "running", "switched_on", "switched_off"] and len(sched) == 97
    stats = _rows(tmp_path / "hom" / "stats.csv")
    assert stats[0] == ["model", "T", "I", "J", "alpha", "status", "objective", "nodes",
                        "lp_iters", "wall_ms"]
    assert main(["solve", str(trace), "--model", "hh", "--clusters", "1",
                 "--out", str(tmp_path / "hh")]) == 0
    hh = _rows(tmp_path / "hh" / "cost.csv")
    assert hh[1][1] == cost[1][1]
    assert _rows(tmp_path / "hh" / "schedule.csv")[0][2] == "cluster_id"


def test_solve_tiny_het_matches_brute(tmp_path):
    trace = tmp_path / "t.csv"
    trace.write_text("slot,demand,slot_size\n1,1.0,1\n2,2.0,1\n")
    main(["solve", str(trace), "--model", "het", "--capacities", "2,1",
          "--out", str(tmp_path / "a")])
    main(["solve", str(trace), "--model", "het", "--capacities", "2,1", "--solver", "brute",
          "--out", str(tmp_path / "b")])
    assert _rows(tmp_path / "a" / "cost.csv") == _rows(tmp_path / "b" / "cost.csv")


def test_solve_infeasible(tmp_path, capsys):
    trace = tmp_path / "t.csv"
    trace.write_text("slot,demand,slot_size\n1,150,1\n")
    assert main(["solve", str(trace), "--out", str(tmp_path)]) == 1
    assert "exceeds fleet capacity" in capsys.readouterr().err


def test_aggregate(tmp_path, capsys):
    trace = tmp_path / "t.csv"
    trace.write_text("slot,demand,slot_size\n1,1,1\n2,3,1\n3,2,1\n4,5,1\n")
    out = tmp_path / "agg.csv"
    assert main(["aggregate", str(trace), "--method", "static", "--alpha", "2",
                 "--out", str(out)]) == 0
    assert [r[1] for r in _rows(out)[1:]] == ["3.0", "5.0"]
    assert "overprovisioning 5" in capsys.readouterr().out
    main(["aggregate", str(trace), "--alpha", "1", "--mode", "mean", "--out", str(out)])
    assert "rearrangement 0" in capsys.readouterr().out
    assert main(["aggregate", str(trace), "--t-hat", "9", "--out", str(out)]) == 1
    assert main(["aggregate", str(trace), "--out", str(out)]) == 1


def test_sweep_and_report(tmp_path, capsys):
    out = tmp_path / "res"
    args = ["sweep", "--workload", "erlang2", "--servers", "20", "--seeds", "0-2",
            "--alpha", "1,4", "--method", "static,local_smooth", "--mode", "max,mean",
            "--out", str(out)]
    assert main(args) == 0
    rows = _rows(out / "report.csv")
    assert tuple(rows[0]) == REPORT_HEADER
    assert len(rows) == 1 + 3 * (3 + 2 * 2 * 2)
    first = [r[:-1] for r in rows]
    main(args)
    assert [r[:-1] for r in _rows(out / "report.csv")] == first
    by = {(r[1], r[3], r[4], r[5]): r for r in rows[1:]}
    for seed in "012":
        for mode in ("max", "mean"):
            static, dynamic = by[(seed, "static", mode, "1")], by[(seed, "local_smooth", mode, "1")]
            assert static[7:11] == dynamic[7:11]
    capsys.readouterr()
    assert main(["report", str(out / "report.csv")]) == 0
    text = capsys.readouterr().out
    assert "savings" in text and "local_smooth" in text


def test_report_empty_and_malformed(tmp_path, capsys):
    empty = tmp_path / "e.csv"
    write_report([], empty)
    main(["report", str(empty)])
    assert capsys.readouterr().out.strip() == "no rows"
    bad = tmp_path / "b.csv"
    bad.write_text("workload,seed\nx,1\n")
    assert main(["report", str(bad)]) == 1
    with pytest.raises(ReportError):
        read_report(bad)


def test_sweep_records_failures():
    config = ExperimentConfig(workload="sinusoidal", servers=10, seeds=(0,),
                              methods=("constrained",), baselines=False)
    rows = run_sweep(config)
    assert rows[0]["status"].startswith("error")


def test_mean_ci():
    m, h = mean_ci([1.0, 2.0, 3.0])
    assert m == 2.0 and h == pytest.approx(4.302652729911275 / 3 ** 0.5)
    assert mean_ci([5.0]) == (5.0, 0.0)


def test_config_parsing(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("# desk run\nworkload = hyperexp2\nseeds = 0-10\nalpha = 1, 2, 12\n"
                    "beta = 0, 0.5, 1\nmodel = hh\nclusters = 10\nservers = 500\n"
                    "switch_on_wear = 0.4\n")
    c = load_config(path)
    assert c.seeds == tuple(range(11)) and c.alphas == (1, 2, 12)
    assert c.betas == (0.0, 0.5, 1.0) and c.cost_overrides == {"switch_on_wear": 0.4}
    with pytest.raises(ValueError):
        apply_settings(c, {"alpha": "0"})
    with pytest.raises(ValueError):
        apply_settings(c, {"seeds": ""})
    with pytest.raises(ValueError):
        apply_settings(c, {"colour": "red"})
    assert set(PRESETS) >= {"sinusoid-baselines", "desk-500", "full-5000"}
    assert PRESETS["full-5000"].servers == 5000 and PRESETS["full-5000"].clusters == 50
