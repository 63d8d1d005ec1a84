import csv
import json
import math
import textwrap

import pytest

from fluidcc.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_NUMERIC, EXIT_OK, main

SCENARIO = """
    [simulation]
    duration = 0.4
    window = 0.2

    [dumbbell]
    senders = 1
    ccas = "bbr1"
    buffer_bdp = 1.0
"""

GRID = """
    [base.simulation]
    duration = 0.3
    window = 0.1

    [base.dumbbell]
    senders = 2
    ccas = "bbr1"

    [axes]
    buffer_bdp = [0.5, 1, 2, 4, 7]
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return str(path)


def test_simulate_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["simulate", "--scenario", write(tmp_path, "s.toml", SCENARIO),
                 "--out", str(out)])
    assert code == EXIT_OK
    metrics = json.loads((out / "metrics.json").read_text())
    assert 0 < metrics["jain_fairness"] <= 1
    assert 0 <= metrics["utilization"] <= 1 + 1e-9
    assert 0 <= metrics["loss_rate"] <= 1
    header = (out / "trace.csv").read_text().splitlines()[0].split(",")
    assert header[0] == "t" and "x_1" in header and "q_btl" in header
    echo = json.loads((out / "scenario-echo.json").read_text())
    assert echo["input"]["dumbbell"]["senders"] == 1 and echo["digest"]
    assert json.loads(capsys.readouterr().out)["window"] == [0.2, 0.2]


def test_simulate_is_byte_reproducible(tmp_path):
    path = write(tmp_path, "s.toml", SCENARIO)
    for name in ("a", "b"):
        assert main(["simulate", "--scenario", path, "--out", str(tmp_path / name)]) == 0
    for f in ("trace.csv", "metrics.json", "scenario-echo.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_simulate_config_errors(tmp_path, capsys):
    bad = write(tmp_path, "bad.toml", SCENARIO.replace("buffer_bdp", "bufer_bdp"))
    assert main(["simulate", "--scenario", bad, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "bufer_bdp" in capsys.readouterr().err
    good = write(tmp_path, "s.toml", SCENARIO)
    # step above a tenth of the smallest delay violates the solver precondition
    assert main(["simulate", "--scenario", good, "--out", str(tmp_path / "o"),
                 "--step", "0.01"]) == EXIT_CONFIG
    assert main(["simulate", "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_simulate_numerical_abort(tmp_path, capsys):
    text = SCENARIO.replace('"bbr1"', '"reno"') + "\n[initial]\nw0 = 1e308\n"
    path = write(tmp_path, "nan.toml", text)
    with pytest.warns(RuntimeWarning):
        code = main(["simulate", "--scenario", path, "--out", str(tmp_path / "o")])
    assert code == EXIT_NUMERIC
    assert "numerical abort" in capsys.readouterr().err


def test_sweep_buffer_axis(tmp_path):
    grid = write(tmp_path, "g.toml", GRID)
    assert main(["sweep", "--grid", grid, "--out", str(tmp_path / "s1")]) == EXIT_OK
    rows = list(csv.DictReader(open(tmp_path / "s1" / "summary.csv")))
    assert len(rows) == 5
    assert [r["buffer_bdp"] for r in rows] == [f"{b:.9e}" for b in (0.5, 1, 2, 4, 7)]
    assert all(r["status"] == "ok" for r in rows)
    assert list(rows[0]) == ["index", "buffer_bdp", "jain_fairness", "loss_rate",
                             "mean_queue_share", "utilization", "jitter", "status"]


def test_sweep_parallel_identical(tmp_path):
    grid = write(tmp_path, "g.toml", GRID)
    assert main(["sweep", "--grid", grid, "--out", str(tmp_path / "p1")]) == EXIT_OK
    assert main(["sweep", "--grid", grid, "--out", str(tmp_path / "p3"),
                 "--parallel", "3"]) == EXIT_OK
    assert ((tmp_path / "p1" / "summary.csv").read_bytes()
            == (tmp_path / "p3" / "summary.csv").read_bytes())


def test_sweep_failed_point_continues(tmp_path):
    grid = write(tmp_path, "g.toml", GRID.replace("buffer_bdp = [0.5, 1, 2, 4, 7]",
                                                  "senders = [0, 1]"))
    assert main(["sweep", "--grid", grid, "--out", str(tmp_path / "f")]) == EXIT_FAILED
    rows = list(csv.DictReader(open(tmp_path / "f" / "summary.csv")))
    assert rows[0]["status"].startswith("error") and math.isnan(float(rows[0]["loss_rate"]))
    assert rows[1]["status"] == "ok"


def test_sweep_empty_grid(tmp_path):
    grid = write(tmp_path, "g.toml", "[axes]\nbuffer_bdp = []\n")
    assert main(["sweep", "--grid", grid, "--out", str(tmp_path / "e")]) == EXIT_CONFIG


def test_analyze_examples(capsys):
    assert main(["analyze", "bbr1-shallow", "-N", "10", "-C", "100"]) == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert rep["x_btl"][0] == pytest.approx(12.1951, abs=1e-4) and rep["stable"] is True
    assert main(["analyze", "bbr1-deep", "-N", "2", "-d", "1"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["lambda_max"] == pytest.approx(-0.5)
    assert main(["analyze", "bbr2", "-N", "1"]) == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert rep["q"] == 0.0 and rep["lambda_max"] == pytest.approx(-1.0)


def test_analyze_invalid_parameters():
    assert main(["analyze", "bbr2", "-N", "0"]) == EXIT_CONFIG
    assert main(["analyze", "bbr2", "-C", "-5"]) == EXIT_CONFIG
    assert main(["analyze", "vegas"]) == EXIT_CONFIG
