import json
from pathlib import Path

import pytest

from edgesim.cli import main, parse_seeds, UsageError
from edgesim.traceio import read_trace, render_trace, write_trace

DATA = Path(__file__).parent / "data"


def write_config(tmp_path, doc):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    return path


def error_record(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_parse_seeds():
    assert parse_seeds("7") == [7]
    assert parse_seeds("0..3") == [0, 1, 2, 3]
    assert parse_seeds("1,3") == [1, 3]
    with pytest.raises(UsageError):
        parse_seeds("3..1")
    with pytest.raises(UsageError):
        parse_seeds("a,b")


def test_min_cover_prints_nine(tmp_path, capsys):
    cfg = write_config(tmp_path, {"grid": "5x5"})
    assert main(["min-cover", "--config", str(cfg)]) == 0
    assert capsys.readouterr().out.strip() == "9"


def test_run_writes_trace_and_summary(tmp_path):
    cfg = write_config(tmp_path, {"grid": "3x3", "controller": {"Q": 500, "horizon": 4}})
    out = tmp_path / "d"
    assert main(["run", "--config", str(cfg), "--seed", "7", "--out", str(out)]) == 0
    header, rows = read_trace(out / "trace.csv")
    summary = json.loads((out / "summary.json").read_text())
    assert len(rows) == 4 and header[:5] == ["t", "q", "P_total", "c_total", "flagged"]
    assert summary["seed"] == 7
    assert summary["mean_cost"] == pytest.approx(sum(r["c_total"] for r in rows) / 4, rel=1e-9)
    assert summary["mean_power"] == pytest.approx(sum(r["P_total"] for r in rows) / 4, rel=1e-9)


def test_golden_trace_bytes(tmp_path):
    out = tmp_path / "g"
    assert main(["run", "--config", str(DATA / "golden_config.json"), "--seed", "7", "--out", str(out)]) == 0
    assert (out / "trace.csv").read_bytes() == (DATA / "golden_trace.csv").read_bytes()
    assert (out / "summary.json").read_bytes() == (DATA / "golden_summary.json").read_bytes()


def test_multiple_seeds(tmp_path):
    cfg = write_config(tmp_path, {"grid": "3x3", "controller": {"Q": 500, "horizon": 3}})
    out = tmp_path / "m"
    assert main(["run", "--config", str(cfg), "--seeds", "0..1", "--policy", "DCU", "--out", str(out)]) == 0
    assert (out / "seed-0" / "trace.csv").exists() and (out / "seed-1" / "summary.json").exists()
    agg = json.loads((out / "summary.json").read_text())
    assert agg["seeds"] == [0, 1] and agg["policy"] == "DCU"


def test_flags_override_config(capsys):
    assert main(["run", "--print-defaults", "--V", "50", "--Q", "1500", "--tau", "2", "--slots", "9"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["controller"] == {"V": 50.0, "Q": 1500.0, "horizon": 9}
    assert doc["rejo"]["tau"] == 2.0


def test_sweep_writes_table(tmp_path, capsys):
    cfg = write_config(tmp_path, {"grid": "3x3", "controller": {"Q": 500, "horizon": 3}})
    out = tmp_path / "s"
    argv = ["sweep", "--config", str(cfg), "--param", "Q", "--values", "400,600", "--seeds", "0..1", "--out", str(out)]
    assert main(argv) == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("value,mean_cost") and len(lines) == 3
    assert "mean_cost" in json.loads(capsys.readouterr().out)


def test_verify_bounds(tmp_path, capsys):
    cfg = write_config(tmp_path, {"grid": "3x3", "controller": {"Q": 500, "horizon": 5}})
    assert main(["verify-bounds", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert {"delay_ok", "power_ok", "telescoping_ok", "c_star_estimate"} <= set(report)
    assert (tmp_path / "b" / "bounds.json").exists()


def test_gibbs_check(capsys):
    assert main(["gibbs-check", "--bs", "2", "--tau", "0.5", "--iters", "5000"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["states"] == ["01", "10", "11"]
    assert "total_variation" in report and "pass" in report


def test_bad_config_value_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, {"compute": {"utilization_cap": 1.2}})
    assert main(["run", "--config", str(cfg)]) == 3
    rec = error_record(capsys)
    assert rec["error"] == "config" and "utilization_cap" in rec["message"]


def test_missing_config_is_io_error(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == 5
    assert error_record(capsys)["error"] == "io"


def test_bad_seed_list_is_usage_error(capsys):
    assert main(["run", "--seeds", "x..y"]) == 2
    assert error_record(capsys)["error"] == "usage"


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["run", "--bogus"])
    assert info.value.code == 2


def test_oversized_min_cover_is_config_error(tmp_path, capsys):
    cfg = write_config(tmp_path, {"grid": "7x7"})
    assert main(["min-cover", "--config", str(cfg)]) == 3


def test_infeasible_instance_exit_code(tmp_path, capsys):
    # operational power alone exceeds every station's cap
    cfg = write_config(tmp_path, {"grid": "3x3", "topology": {"power_cap": 10}, "controller": {"horizon": 2}})
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 4
    assert error_record(capsys)["error"] == "infeasible"


def test_empty_trace_rejected_without_file(tmp_path):
    path = tmp_path / "empty.csv"
    with pytest.raises(ValueError):
        write_trace([], path)
    assert not path.exists()
    with pytest.raises(ValueError):
        render_trace([])
