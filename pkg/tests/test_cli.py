import csv
import json
import math

import numpy as np
import pytest

from igblab.cli import main

SMALL = ["--input-dim", "64", "--dataset-size", "2000", "--ensemble", "60"]


def run(args, capsys=None):
    code = main([str(a) for a in args])
    out = capsys.readouterr() if capsys else None
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_writes_files(tmp_path):
    out = tmp_path / "sim"
    code, _ = run(["simulate", "--activation", "relu", "--depth", "1", "--width", "100",
                   "--dataset-size", "2000", "--input-dim", "128", "--ensemble", "200",
                   "--seed", "7", "--out", out])
    assert code == 0
    assert {p.name for p in out.iterdir()} == {"ensemble.csv", "summary.json", "config.json"}
    summary = json.loads((out / "summary.json").read_text())
    assert abs(summary["mean_f"][0] - 0.5) < 0.05
    assert json.loads((out / "config.json").read_text())["command"] == "simulate"


def test_simulate_max_pool_is_bimodal(tmp_path):
    out = tmp_path / "pool"
    code, _ = run(["simulate", "--pool", "max", "--kernel", "20", "--width", "500",
                   "--input-dim", "128", "--dataset-size", "2000", "--ensemble", "150",
                   "--out", out])
    assert code == 0
    mass = np.array(json.loads((out / "summary.json").read_text())["hist_mass"])
    ends = mass[:3].sum() + mass[-3:].sum()
    middle = mass[20:31].sum()
    assert ends > 0.4 and ends > 3 * middle


def test_missing_out_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["simulate", *SMALL])
    assert info.value.code == 2
    assert "--out" in capsys.readouterr().err


def test_sweep_requires_axis(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["sweep", "--values", "1", "--out", str(tmp_path)])
    assert info.value.code == 2


def test_theory_relu_cumulants(tmp_path):
    code, _ = run(["theory", "--activation", "relu", "--out", tmp_path])
    assert code == 0
    cum = json.loads((tmp_path / "cumulants.json").read_text())
    assert cum["var_mu"] == pytest.approx(2 / math.pi, abs=1e-12)
    assert read_csv(tmp_path / "curve.csv")[0].keys() == {"f0", "pdf", "cdf"}


def test_theory_tanh_no_igb(tmp_path):
    code, _ = run(["theory", "--activation", "tanh", "--out", tmp_path])
    assert code == 0
    cum = json.loads((tmp_path / "cumulants.json").read_text())
    assert cum["no_igb"] is True and cum["var_mu"] == 0.0
    rows = read_csv(tmp_path / "curve.csv")
    assert len(rows) == 1 and float(rows[0]["f0"]) == 0.5 and float(rows[0]["cdf"]) == 1.0


def test_theory_linear_offset_gamma(tmp_path):
    code, _ = run(["theory", "--activation", "linear", "--offset", "2", "--out", tmp_path])
    assert code == 0
    assert json.loads((tmp_path / "cumulants.json").read_text())["gamma"] == pytest.approx(4.0)


def test_theory_outputs_are_reproducible(tmp_path):
    args = ["theory", "--pool", "max", "--kernel", "8", "--width", "400"]
    run([*args, "--out", tmp_path / "a"])
    run(["theory", "--config", tmp_path / "a" / "config.json", "--out", tmp_path / "b"])
    for name in ("curve.csv", "cumulants.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.parametrize("args,expected", [(["--activation", "relu"], "present"),
                                           (["--activation", "srelu"], "absent"),
                                           (["--activation", "tanh"], "absent"),
                                           (["--activation", "linear", "--offset", "2"], "present"),
                                           (["--pool", "max", "--kernel", "4"], "present")])
def test_classify(args, expected, capsys):
    code, out = run(["classify", *args], capsys)
    assert code == 0 and out.out.strip() == expected


def test_compare_writes_report(tmp_path):
    code, _ = run(["compare", "--input-dim", "256", "--dataset-size", "4000", "--ensemble", "200",
                   "--seed", "2", "--out", tmp_path])
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert {"ks", "ks_threshold", "verdicts", "gamma_theory"} <= set(report)
    for name in ("ensemble.csv", "summary.json", "curve.csv", "cumulants.json", "config.json"):
        assert (tmp_path / name).exists()


def test_rerun_from_config_is_bit_identical(tmp_path):
    first = tmp_path / "first"
    assert run(["simulate", "--activation", "tanh", "--depth", "2", "--width", "30",
                "--width", "20", *SMALL, "--seed", "5", "--threads", "2", "--out", first])[0] == 0
    second = tmp_path / "second"
    assert run(["simulate", "--config", first / "config.json", "--out", second])[0] == 0
    for name in ("ensemble.csv", "summary.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_environment_overrides_file_and_flags_override_env(tmp_path, monkeypatch):
    cfg = tmp_path / "in.json"
    cfg.write_text(json.dumps({"seed": 1, "dataset_size": 500, "input_dim": 16, "ensemble": 30}))
    monkeypatch.setenv("IGB_SEED", "11")
    monkeypatch.setenv("IGB_DATASET_SIZE", "700")
    assert run(["simulate", "--config", cfg, "--dataset-size", "900",
                "--out", tmp_path / "o"])[0] == 0
    written = json.loads((tmp_path / "o" / "config.json").read_text())
    assert written["seed"] == 11 and written["dataset_size"] == 900 and written["ensemble"] == 30


@pytest.mark.parametrize("args", [["--pool", "none", "--kernel", "2"], ["--gain", "-1"],
                                  ["--classes", "1"], ["--ensemble", "0"]])
def test_invalid_config_exits_2(args, tmp_path, capsys):
    code, out = run(["simulate", *args, "--out", tmp_path], capsys)
    assert code == 2 and "configuration error" in out.err


def test_unknown_config_field_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"sead": 3}))
    code, out = run(["theory", "--config", cfg, "--out", tmp_path], capsys)
    assert code == 2 and "sead" in out.err


def test_out_of_scope_theory_exits_2(tmp_path):
    assert run(["theory", "--activation", "tanh", "--depth", "3", "--width", "20",
                "--out", tmp_path])[0] == 2


def test_overflowing_network_exits_3(tmp_path, capsys):
    code, out = run(["simulate", "--activation", "linear", "--depth", "6", "--width", "20",
                     "--gain", "1e9", "--input-dim", "8", "--dataset-size", "50",
                     "--ensemble", "5", "--out", tmp_path], capsys)
    assert code == 3 and "numerical error" in out.err


def test_sweep_offset_linear(tmp_path):
    # The dataset is shared by all replicas, so at K = 0 its sample mean sets the
    # centre spread; a large input dimension keeps that draw close to 1/D.
    code, _ = run(["sweep", "--axis", "K", "--values", "0", "1", "2", "4", "--activation", "linear",
                   "--input-dim", "2048", "--dataset-size", "2000", "--ensemble", "200",
                   "--finite-size", "--out", tmp_path])
    assert code == 0
    rows = read_csv(tmp_path / "sweep.csv")
    assert [float(r["value"]) for r in rows] == [0, 1, 2, 4]
    for r, k in zip(rows, (0, 1, 2, 4)):
        emp, se, th = float(r["gamma_emp"]), float(r["gamma_emp_stderr"]), float(r["gamma_theory"])
        if k:
            assert th == pytest.approx(k * k)
        assert abs(emp - th) <= 3 * se


def test_sweep_depth_theory_increasing(tmp_path):
    code, _ = run(["sweep", "--axis", "L", "--values", "1", "2", "4", "8", "--no-simulate",
                   "--out", tmp_path])
    assert code == 0
    rows = read_csv(tmp_path / "sweep.csv")
    gammas = [float(r["gamma_theory"]) for r in rows]
    assert np.all(np.diff(gammas) > 0)
    assert all(r["gamma_emp"] == "" for r in rows)


def test_sweep_kernel_extreme_mass_increasing(tmp_path):
    code, _ = run(["sweep", "--axis", "k", "--values", "1", "2", "4", "--pool", "max",
                   "--width", "200", "--input-dim", "128", "--dataset-size", "10000",
                   "--ensemble", "300", "--out", tmp_path])
    assert code == 0
    rows = read_csv(tmp_path / "sweep.csv")
    theory = [float(r["extreme_mass_theory"]) for r in rows]
    emp = [float(r["extreme_mass_emp"]) for r in rows]
    assert np.all(np.diff(theory) > 0)
    assert np.all(np.diff(emp) > 0)


def test_sweep_bad_axis_combination(tmp_path):
    assert run(["sweep", "--axis", "k", "--values", "2", "--no-simulate",
                "--out", tmp_path])[0] == 2
    assert run(["sweep", "--axis", "L", "--values", "1.5", "--no-simulate",
                "--out", tmp_path])[0] == 2
