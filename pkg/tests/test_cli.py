"""End-to-end checks for the JSON config layer and the command-line tool."""

import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from relaysched.cli import main
from relaysched.config import (
    ConfigError,
    parse_config,
    serialize_config,
)
from relaysched.metrics import read_histogram_csv, read_report_csv

FIXTURES = Path(__file__).parent / "fixtures"

LINE_NET = {"kind": "line", "capacities": [8, 8, 12, 4]}
DIAMOND_NET = {"kind": "diamond", "capacities": [[3, 3], [2, 3], [3, 2], [2, 2]]}


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def line_config(tmp_path, **run):
    run_block = {"rates": [2.0], "horizon": 400, "seeds": [1, 2]}
    run_block.update(run)
    return write_config(tmp_path, {
        "network": LINE_NET,
        "scheduler": {"name": ["hc-ec", "bp"]},
        "run": run_block,
        "output": {"path": str(tmp_path / "out")},
    })


# --- config parsing ---


def test_minimal_config_uses_defaults():
    cfg = parse_config({"network": LINE_NET})
    assert cfg.schedulers == ("hc-ec",)
    assert cfg.policy is None
    assert cfg.rates == (1.0,)
    assert cfg.horizon == 10_000
    assert cfg.warmup == 0
    assert cfg.seeds == (0,)
    assert cfg.saturated is False
    assert cfg.out_dir == "."
    assert cfg.plots is True
    assert cfg.traces is False


def test_scheduler_name_accepts_plain_string():
    cfg = parse_config({"network": LINE_NET, "scheduler": {"name": "bp"}})
    assert cfg.schedulers == ("bp",)


@pytest.mark.parametrize("data", [
    {"network": LINE_NET, "extra": 1},
    {"network": dict(LINE_NET, color="red")},
    {"network": LINE_NET, "scheduler": {"name": "bp", "speed": 9}},
    {"network": LINE_NET, "run": {"slots": 10}},
    {"network": LINE_NET, "output": {"path": ".", "format": "hdf5"}},
    {"network": LINE_NET,
     "run": {"rates": {"start": 1, "stop": 2, "step": 1, "log": True}}},
])
def test_unknown_keys_rejected_at_every_level(data):
    with pytest.raises(ConfigError, match="unknown"):
        parse_config(data)


def test_rates_range_expands_inclusively():
    cfg = parse_config({
        "network": LINE_NET,
        "run": {"rates": {"start": 1, "stop": 2, "step": 0.5}},
    })
    assert cfg.rates == (1.0, 1.5, 2.0)
    # accumulated float error must not drop the endpoint
    cfg = parse_config({
        "network": LINE_NET,
        "run": {"rates": {"start": 1, "stop": 1.3, "step": 0.1}},
    })
    assert cfg.rates == (1.0, 1.1, 1.2, 1.3)


@pytest.mark.parametrize("data,match", [
    ({"network": {"kind": "ring", "capacities": [1, 2]}}, "kind"),
    ({"network": {"kind": "line", "capacities": [8, 0, 4]}}, "capacities"),
    ({"network": LINE_NET, "run": {"horizon": 100, "warmup": 100}}, "warmup"),
    ({"network": LINE_NET, "scheduler": {"name": "greedy"}}, "unknown scheduler"),
    ({"network": LINE_NET, "scheduler": {"name": "bp", "rho": 2.0}}, "newbp"),
    ({"network": LINE_NET, "run": {"rates": []}}, "empty"),
    ({"network": LINE_NET, "scheduler": {"name": ["bp", "bp"]}}, "duplicate"),
    ({"network": LINE_NET, "run": {"seeds": [1, "two"]}}, "seeds"),
    ({"network": LINE_NET, "run": {"rates": [-0.5]}}, "negative"),
])
def test_invalid_configs_rejected(data, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(data)


def test_config_round_trips_through_serialization():
    cfg = parse_config({
        "network": DIAMOND_NET,
        "scheduler": {"name": ["newbp", "bp"], "rho": 0.5, "tau": 4.0,
                      "beta": [0, 0, 1, 0, 2, 0, 16, 0]},
        "run": {"rates": [1.0, 2.25], "horizon": 5000, "warmup": 100,
                "seeds": [3, 4], "saturated": False},
        "output": {"path": "results", "plots": False, "traces": True},
    })
    assert parse_config(serialize_config(cfg)) == cfg


# --- exit codes ---


def test_missing_config_file_is_a_config_error(tmp_path, capsys):
    assert main(["capacity", "--config", str(tmp_path / "nope.json")]) == 1
    assert "config error" in capsys.readouterr().err


def test_malformed_json_is_a_config_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["capacity", "--config", str(path)]) == 1
    assert "config error" in capsys.readouterr().err


def test_unknown_key_fails_via_main(tmp_path):
    path = write_config(tmp_path, {"network": LINE_NET, "mystery": 1})
    assert main(["capacity", "--config", str(path)]) == 1


def test_unwritable_output_dir_is_a_runtime_error(tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    path = write_config(tmp_path, {
        "network": LINE_NET,
        "run": {"horizon": 10},
        "output": {"path": str(blocker / "sub"), "plots": False},
    })
    assert main(["simulate", "--config", path]) == 2
    assert "error" in capsys.readouterr().err


# --- capacity ---


def test_capacity_line_output(tmp_path, capsys):
    path = write_config(tmp_path, {"network": LINE_NET})
    assert main(["capacity", "--config", path]) == 0
    assert capsys.readouterr().out == "capacity=3/1\n"


def test_capacity_diamond_output(tmp_path, capsys):
    path = write_config(tmp_path, {"network": DIAMOND_NET})
    assert main(["capacity", "--config", path]) == 0
    assert capsys.readouterr().out == "capacity=27/10 x=1/1,1/2,1/2,0/1\n"


# --- schedule ---


def test_schedule_line_files_match_references(tmp_path, capsys):
    path = write_config(tmp_path, {"network": LINE_NET,
                                   "output": {"path": str(tmp_path)}})
    assert main(["schedule", "--config", path]) == 0
    out = capsys.readouterr().out
    assert out.startswith("delta=8 share=1/8\n")
    written = (tmp_path / "line_hc-ec_coloring.txt").read_text()
    assert written == (FIXTURES / "line_colors.txt").read_text()
    written = (tmp_path / "line_hc-ec_schedule.txt").read_text()
    assert written == (FIXTURES / "line_schedule.txt").read_text()


def test_schedule_diamond_files_match_references(tmp_path, capsys):
    path = write_config(tmp_path, {"network": DIAMOND_NET,
                                   "output": {"path": str(tmp_path)}})
    assert main(["schedule", "--config", path]) == 0
    assert capsys.readouterr().out.startswith("delta=10 share=1/10\n")
    written = (tmp_path / "diamond_hc-ec_coloring.txt").read_text()
    assert written == (FIXTURES / "diamond_colors.txt").read_text()
    written = (tmp_path / "diamond_hc-ec_schedule.txt").read_text()
    assert written == (FIXTURES / "diamond_schedule.txt").read_text()


def test_schedule_interval_baseline(tmp_path):
    path = write_config(tmp_path, {"network": LINE_NET,
                                   "output": {"path": str(tmp_path)}})
    assert main(["schedule", "--config", path, "--scheduler", "ec"]) == 0
    written = (tmp_path / "line_ec_coloring.txt").read_text()
    assert written == "1: 1,2,3\n2: 4,5,6\n3: 7,8\n4: 1,2,3,4,5,6\n"


def test_schedule_rejects_adaptive_schedulers(tmp_path, capsys):
    path = write_config(tmp_path, {"network": LINE_NET})
    assert main(["schedule", "--config", path, "--scheduler", "bp"]) == 1
    assert "no precomputed schedule" in capsys.readouterr().err


# --- simulate ---


def test_simulate_writes_report_and_histograms(tmp_path):
    path = line_config(tmp_path)
    assert main(["simulate", "--config", path, "--no-plot"]) == 0
    out = tmp_path / "out"
    rows = read_report_csv(out / "report.csv")
    assert [(r["scheduler"], r["rate"], r["seed"]) for r in rows] == [
        ("hc-ec", 2.0, 1), ("hc-ec", 2.0, 2), ("bp", 2.0, 1), ("bp", 2.0, 2)]
    for row in rows:
        assert row["network"] == "line"
        assert row["horizon"] == 400
        assert row["avg_sum_backlog"] > 0
        assert row["mean_delay"] >= 4  # four hops minimum
    hist = read_histogram_csv(out / "hist_bp_r2_s1.csv")
    assert hist and all(count > 0 for _, count, _ in hist)
    assert not (out / "delay_cdf.png").exists()


def test_simulate_renders_delay_cdf_by_default(tmp_path):
    path = line_config(tmp_path, horizon=200, seeds=[1])
    assert main(["simulate", "--config", path]) == 0
    png = tmp_path / "out" / "delay_cdf.png"
    assert png.exists() and png.stat().st_size > 0


def test_simulate_traces_flag_writes_per_slot_files(tmp_path):
    path = write_config(tmp_path, {
        "network": LINE_NET,
        "scheduler": {"name": "bp"},
        "run": {"rates": [2.0], "horizon": 150, "seeds": [5]},
        "output": {"path": str(tmp_path / "out"), "plots": False,
                   "traces": True},
    })
    assert main(["simulate", "--config", path]) == 0
    out = tmp_path / "out"
    backlog = (out / "backlog_bp_r2_s5.csv").read_text().splitlines()
    assert backlog[0] == "slot,U_0,U_1,U_2,U_3"
    assert len(backlog) == 152  # header + horizon+1 snapshots
    delivered = (out / "delivered_bp_r2_s5.csv").read_text().splitlines()
    assert delivered[0] == "packet_id,created_slot,delivered_slot,path_id"
    assert len(delivered) > 1


def test_simulate_flag_overrides_reach_the_report(tmp_path):
    path = line_config(tmp_path)
    assert main(["simulate", "--config", path, "--scheduler", "bp",
                 "--rate", "1.5", "--seed", "7", "--horizon", "250",
                 "--warmup", "50", "--no-plot"]) == 0
    rows = read_report_csv(tmp_path / "out" / "report.csv")
    assert len(rows) == 1
    row = rows[0]
    assert (row["scheduler"], row["rate"], row["seed"]) == ("bp", 1.5, 7)
    assert (row["horizon"], row["warmup"]) == (250, 50)


def test_override_cannot_strand_policy_knobs(tmp_path, capsys):
    path = write_config(tmp_path, {
        "network": LINE_NET,
        "scheduler": {"name": ["newbp"], "rho": 2.0},
        "run": {"horizon": 50},
        "output": {"path": str(tmp_path / "out"), "plots": False},
    })
    assert main(["simulate", "--config", path, "--scheduler", "bp"]) == 1
    assert "newbp" in capsys.readouterr().err


def test_simulate_rejects_interval_baseline_on_diamond(tmp_path, capsys):
    path = write_config(tmp_path, {
        "network": DIAMOND_NET,
        "scheduler": {"name": "ec"},
        "run": {"horizon": 50},
        "output": {"path": str(tmp_path / "out"), "plots": False},
    })
    assert main(["simulate", "--config", path]) == 1
    assert "line" in capsys.readouterr().err


# --- sweep ---


def sweep_config(tmp_path, **overrides):
    data = {
        "network": LINE_NET,
        "scheduler": {"name": ["hc-ec", "bp"]},
        "run": {"rates": [1.0, 2.0], "horizon": 300, "seeds": [3, 4]},
        "output": {"path": str(tmp_path / "out"), "plots": False},
    }
    data.update(overrides)
    return write_config(tmp_path, data)


def test_sweep_rows_follow_task_order(tmp_path):
    path = sweep_config(tmp_path)
    assert main(["sweep", "--config", path]) == 0
    rows = read_report_csv(tmp_path / "out" / "sweep.csv")
    key = [(r["scheduler"], r["rate"], r["seed"]) for r in rows]
    assert key == [(s, r, d) for s in ("hc-ec", "bp")
                   for r in (1.0, 2.0) for d in (3, 4)]


def test_sweep_seeds_share_identity_columns(tmp_path):
    path = sweep_config(tmp_path)
    assert main(["sweep", "--config", path]) == 0
    rows = read_report_csv(tmp_path / "out" / "sweep.csv")
    a, b = rows[0], rows[1]
    assert (a["seed"], b["seed"]) == (3, 4)
    for col in ("scheduler", "network", "rate", "horizon", "warmup"):
        assert a[col] == b[col]


def test_sweep_is_deterministic_across_runs(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    first = sweep_config(tmp_path / "a",
                         output={"path": str(tmp_path / "a" / "out"),
                                 "plots": False})
    second = sweep_config(tmp_path / "b",
                          output={"path": str(tmp_path / "b" / "out"),
                                  "plots": False})
    assert main(["sweep", "--config", first]) == 0
    assert main(["sweep", "--config", second]) == 0
    assert (tmp_path / "a" / "out" / "sweep.csv").read_bytes() == \
        (tmp_path / "b" / "out" / "sweep.csv").read_bytes()


def test_sweep_turns_failed_runs_into_nan_rows(tmp_path, capsys):
    path = write_config(tmp_path, {
        "network": DIAMOND_NET,
        "scheduler": {"name": ["hc-ec", "ec"]},  # interval needs a line
        "run": {"rates": [1.0], "horizon": 200, "seeds": [0]},
        "output": {"path": str(tmp_path / "out"), "plots": False},
    })
    assert main(["sweep", "--config", path]) == 0
    assert "run failed" in capsys.readouterr().err
    rows = read_report_csv(tmp_path / "out" / "sweep.csv")
    assert len(rows) == 2
    good = next(r for r in rows if r["scheduler"] == "hc-ec")
    bad = next(r for r in rows if r["scheduler"] == "ec")
    assert math.isfinite(good["avg_sum_backlog"])
    assert math.isnan(bad["avg_sum_backlog"])
    assert math.isnan(bad["mean_delay"])
    assert (bad["rate"], bad["seed"], bad["horizon"]) == (1.0, 0, 200)


def test_sweep_renders_backlog_figure(tmp_path):
    path = write_config(tmp_path, {
        "network": LINE_NET,
        "scheduler": {"name": "bp"},
        "run": {"rates": [1.0, 2.0], "horizon": 150, "seeds": [0]},
        "output": {"path": str(tmp_path / "out")},
    })
    assert main(["sweep", "--config", path]) == 0
    png = tmp_path / "out" / "backlog_vs_rate.png"
    assert png.exists() and png.stat().st_size > 0


# --- module entry point ---


def test_module_invocation(tmp_path):
    path = write_config(tmp_path, {"network": LINE_NET})
    proc = subprocess.run(
        [sys.executable, "-m", "relaysched", "capacity", "--config", path],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == "capacity=3/1\n"
