import json

import numpy as np
import pytest

from nmflow.cli import main


def read_summary(out, name):
    return json.loads((out / f"{name}.json").read_text())


def test_physicality_cli(tmp_path):
    code = main(["physicality", "--alpha", "0.4", "--out", str(tmp_path), "--check"])
    assert code == 0
    csv = (tmp_path / "physicality.csv").read_text()
    assert csv.splitlines()[0] == "t,value"
    summary = read_summary(tmp_path, "physicality")
    assert summary["landmark"]["pass"] is True
    assert summary["threshold"] == pytest.approx(0.7686, abs=1e-3)


def test_povm_bound_cli(tmp_path):
    assert main(["povm-bound", "--da", "2", "--db", "6", "--out", str(tmp_path), "--check"]) == 0
    summary = read_summary(tmp_path, "povm-bound")
    assert summary["bound"] == 6.0
    assert summary["landmark"]["pass"] is True


def test_pg_counterexample_cli(tmp_path):
    assert main(["pg-counterexample", "--out", str(tmp_path), "--check"]) == 0
    summary = read_summary(tmp_path, "pg-counterexample")
    assert summary["projective"] == pytest.approx(0.65, abs=1e-14)
    assert summary["transformed"] == pytest.approx(0.725, abs=1e-14)


def test_eb_time_cli(tmp_path):
    assert main(["eb-time", "--alpha", "0.4", "--t0", "2", "--out", str(tmp_path),
                 "--check"]) == 0
    summary = read_summary(tmp_path, "eb-time")
    assert 1.46 <= summary["t_eb"] <= 1.48
    header = (tmp_path / "eb-time.csv").read_text().splitlines()[0]
    assert header == "t,value"


def test_mi_scan_cli_fixed_state(tmp_path):
    assert main(["mi-scan", "--alpha", "0.4", "--t0", "1", "--out", str(tmp_path),
                 "--check"]) == 0
    summary = read_summary(tmp_path, "mi-scan")
    assert summary["onset"] == pytest.approx(2.741, abs=5e-3)
    header = (tmp_path / "mi-scan.csv").read_text().splitlines()[0]
    assert header == "t,value,derivative"


def test_mi_scan_cli_random_deterministic(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    args = ["mi-scan", "--random", "40", "--t-max", "3.0", "--step", "0.01", "--seed", "17"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert (out1 / "mi-scan.csv").read_bytes() == (out2 / "mi-scan.csv").read_bytes()


def test_divisibility_scan_cli_with_channel_json(tmp_path):
    knots = [[float(t), float(np.cos(t))] for t in np.linspace(0, 4, 41)]
    channel = json.dumps({"family": "dephasing", "gamma": knots})
    assert main(["divisibility-scan", "--channel", channel, "--t-max", "4", "--step", "0.05",
                 "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "divisibility-scan.csv").read_text().splitlines()
    assert lines[0] == "t,value,flag"
    labels = {line.split(",")[2] for line in lines[1:]}
    assert labels == {"CPDivisible", "NotP"}


def test_probe_backflow_cli(tmp_path):
    assert main(["probe-backflow", "--alpha", "0.4", "--t0", "2", "--tau", "3", "--p", "0.2",
                 "--out", str(tmp_path), "--check"]) == 0
    summary = read_summary(tmp_path, "probe-backflow")
    assert summary["optimizer_at_tau"] == pytest.approx(0.1, abs=1e-7)
    assert summary["monotone_before_t0"] and summary["increasing_after_tau"]
    header = (tmp_path / "probe-backflow.csv").read_text().splitlines()[0]
    assert header == "t,value,derivative,flag"


def test_gadc_scan_cli(tmp_path):
    assert main(["gadc-scan", "--eps", "1e-3", "--out", str(tmp_path)]) == 0
    summary = read_summary(tmp_path, "gadc-scan")
    assert summary["results"][0]["interval"] is not None


def test_hessian_check_cli(tmp_path):
    assert main(["hessian-check", "--draws", "5", "--out", str(tmp_path), "--check"]) == 0
    summary = read_summary(tmp_path, "hessian-check")
    assert summary["max_deviation"] <= 1e-3


def test_cli_error_exit_codes(tmp_path):
    # Unparseable arguments and domain errors exit 1.
    assert main(["probe-backflow", "--p", "0.5", "--out", str(tmp_path)]) == 1
    assert main(["no-such-experiment"]) == 1
    bad_config = tmp_path / "bad.json"
    bad_config.write_text("{not json")
    assert main(["physicality", "--config", str(bad_config)]) == 1
    mismatched = tmp_path / "mismatch.json"
    mismatched.write_text(json.dumps({"experiment": "eb-time"}))
    assert main(["physicality", "--config", str(mismatched)]) == 1


def test_cli_check_failure_exits_2(tmp_path):
    # The random-state landmark applies from 2000 samples on, but a scan
    # window ending before the earliest backflow finds no onset: check fails.
    assert main(["mi-scan", "--random", "2000", "--t-max", "2.0", "--step", "0.01",
                 "--out", str(tmp_path), "--check"]) == 2


def test_cli_config_file(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "experiment": "divisibility-scan",
        "channel": {"family": "quasi_eternal", "alpha": 0.4, "t0": 1.0},
        "grid": {"t_max": 3.0, "step": 0.05},
        "seed": 3,
        "output": str(tmp_path / "run"),
    }))
    assert main(["divisibility-scan", "--config", str(config)]) == 0
    lines = ((tmp_path / "run") / "divisibility-scan.csv").read_text().splitlines()
    assert lines[0] == "t,value,flag"
    # Rates turn negative past t0 = 1 while pair sums stay nonnegative.
    flags = [line.split(",")[2] for line in lines[1:]]
    assert "PNotCP" in flags and "CPDivisible" in flags
