import csv
import json
import math
import re

import pytest

from steerlab import cli
from steerlab.experiments import BERRY_COLUMNS, LOOP_COLUMNS, worker_count

SCI = re.compile(r"^-?\d\.\d{11}e[+-]\d{2}$")


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_fmt():
    assert cli.fmt(0.1) == "1.00000000000e-01"
    assert cli.fmt(3) == "3.00000000000e+00"
    assert cli.fmt(True) == "true"
    assert cli.fmt(math.nan) == "nan"
    assert cli.fmt("x") == "x"


def test_loop_run_outputs(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["run", "--experiment", "loop", "--r", "0,0.5", "--xi", "0.1",
                     "--out", str(out)]) == 0
    raw = (out / "results.csv").read_bytes()
    assert b"\r" not in raw
    rows = read_csv(out / "results.csv")
    assert rows[0] == LOOP_COLUMNS
    assert len(rows) == 3
    for row in rows[1:]:
        assert all(SCI.match(cell) for cell in row), row
    report = json.loads((out / "report.json").read_text())
    assert report["inputs"]["frame"] == "lab" and report["inputs"]["phi0"] == 0.0
    assert report["failures"] == []
    for res in report["results"]:
        assert res["phase_delta"] == abs(res["phase_sim"] - res["phase_closed"])
        assert res["visibility_delta"] >= 0
    assert report["runtime"]["backend"] in ("compiled", "python")


def test_run_is_deterministic(tmp_path):
    args = ["run", "--experiment", "sweep", "--r", "0.5", "--xi-range", "0.2:0.05:0.5"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "results.csv").read_bytes()
    assert a == (tmp_path / "b" / "results.csv").read_bytes()
    ja = json.loads((tmp_path / "a" / "report.json").read_text())
    jb = json.loads((tmp_path / "b" / "report.json").read_text())
    for j in (ja, jb):
        j.pop("runtime")
        j["inputs"].pop("out")
    assert ja == jb


def test_parallel_sweep_sorted(tmp_path, monkeypatch):
    monkeypatch.setenv("STEERLAB_WORKERS", "2")
    assert worker_count() == 2
    out = tmp_path / "p"
    assert cli.main(["run", "--experiment", "sweep", "--r", "0.5,0.25", "--xi", "0.05,0.2",
                     "--out", str(out)]) == 0
    rows = read_csv(out / "results.csv")[1:]
    keys = [(float(r[0]), float(r[1])) for r in rows]
    assert keys == sorted(keys) and len(keys) == 4
    monkeypatch.setenv("STEERLAB_WORKERS", "1")
    serial = tmp_path / "s"
    cli.main(["run", "--experiment", "sweep", "--r", "0.5,0.25", "--xi", "0.05,0.2",
              "--out", str(serial)])
    assert (serial / "results.csv").read_bytes() == (out / "results.csv").read_bytes()


def test_bad_worker_env(monkeypatch):
    monkeypatch.setenv("STEERLAB_WORKERS", "many")
    with pytest.raises(ValueError, match="STEERLAB_WORKERS"):
        worker_count()


def test_berry_run(tmp_path):
    out = tmp_path / "b"
    assert cli.main(["run", "--experiment", "berry", "--out", str(out)]) == 0
    rows = read_csv(out / "results.csv")
    assert rows[0] == BERRY_COLUMNS
    assert [float(r[0]) for r in rows[1:]] == [0.25, 0.5, 1.0]
    assert all(float(r[4]) < 1e-6 for r in rows[1:])


def test_polarization_run(tmp_path):
    out = tmp_path / "pol"
    assert cli.main(["run", "--experiment", "polarization", "--out", str(out)]) == 0
    (row,) = json.loads((out / "report.json").read_text())["results"]
    delta = row["delta"]
    assert delta == pytest.approx(1.20088, abs=1e-5)
    assert [row["s0"], row["s1"], row["s2"], row["s3"]] == pytest.approx(
        [1, math.cos(delta), math.sin(delta), 0], abs=1e-15)


def test_fivelevel_run(tmp_path):
    out = tmp_path / "f"
    assert cli.main(["run", "--experiment", "fivelevel", "--xi", "0.05", "--out", str(out)]) == 0
    (row,) = json.loads((out / "report.json").read_text())["results"]
    assert row["r1"] == 0.5 and row["r2"] == 1.0
    assert row["phase_delta"] < 0.05


def test_integration_failure_reported(tmp_path, capsys):
    out = tmp_path / "fail"
    code = cli.main(["run", "--experiment", "loop", "--xi", "0.01", "--steps-per-period", "10",
                     "--out", str(out)])
    assert code == 1
    assert "integration failure at r=0.5, xi=0.01" in capsys.readouterr().out
    rows = read_csv(out / "results.csv")
    assert rows[1][LOOP_COLUMNS.index("phase_sim")] == "nan"
    assert json.loads((out / "report.json").read_text())["failures"]


@pytest.mark.parametrize("args,msg", [
    (["run", "--experiment", "loop", "--xi", "0"], "xi: must be > 0"),
    (["run", "--config", "/nonexistent.json"], "config file not found"),
    (["run", "--experiment", "sweep"], "xi"),
])
def test_config_errors_exit_2(tmp_path, capsys, args, msg):
    assert cli.main(args + ["--out", str(tmp_path)]) == 2
    assert msg in capsys.readouterr().err


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"experiment": "loop", "zzz": 1, "bogus": 2}')
    assert cli.main(["run", "--config", str(cfg)]) == 2
    assert "unknown keys: bogus, zzz" in capsys.readouterr().err


def test_verify_negative_control(tmp_path, capsys):
    out = tmp_path / "v"
    assert cli.main(["verify", "--steps-per-period", "10", "--out", str(out)]) == 1
    rows = read_csv(out / "results.csv")
    by_id = {r[0]: r for r in rows[1:]}
    assert by_id["1"][5] == "false" and "violated" in by_id["1"][6]
    assert by_id["E1"][5] == "false"
    assert "failed:" in capsys.readouterr().out
