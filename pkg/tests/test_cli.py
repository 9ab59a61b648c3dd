import json

import pytest

from ssvcg import oracles
from ssvcg.cli import CSV_HEADER, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_optimize_defaults(capsys):
    code, out, _ = run(capsys, "optimize", "--n", "4", "--alpha", "0.5", "--seed", "1")
    assert code == 0
    d = json.loads(out)
    assert 0 <= d["t_numerical"] <= 0.5
    assert {"c", "t_numerical", "constants", "lp_stats"} <= set(d)
    assert d["train_samples"] == 20000


def test_optimize_n2(capsys):
    code, out, _ = run(capsys, "optimize", "--n", "2", "--alpha", "0.5", "--train-samples", "500")
    d = json.loads(out)
    assert code == 0 and d["c"] == []
    assert d["t_numerical"] == pytest.approx(oracles.ssvcg_worst_ratio_closed(2, 0.5), abs=1e-12)


def test_missing_alpha_is_usage_error(capsys):
    code, _, err = run(capsys, "optimize", "--n", "4")
    assert code == 2 and "alpha" in err


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        main(["optimize", "--bogus"])
    assert e.value.code == 2


def test_config_overrides_flags(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 3, "surrogate": {"kind": "power_law", "alpha": 0.25}, "train_samples": 300}))
    code, out, _ = run(capsys, "optimize", "--n", "5", "--alpha", "0.5", "--config", str(cfg))
    d = json.loads(out)
    assert code == 0 and d["n"] == 3 and d["alpha"] == 0.25 and d["train_samples"] == 300
    cfg.write_text(json.dumps({"nope": 1}))
    assert run(capsys, "optimize", "--config", str(cfg))[0] == 2


def test_optimize_extras(tmp_path, capsys):
    out = tmp_path / "o.json"
    code, _, _ = run(
        capsys, "optimize", "--n", "3", "--alpha", "0.5", "--train-samples", "100", "--with-cover", "0.2",
        "--epsilon", "0.1", "--delta", "0.01", "--samples-out", str(tmp_path / "s.csv"), "--out", str(out),
    )
    d = json.loads(out.read_text())
    assert code == 0
    assert d["constants"]["sample_count"] == 216  # ceil(20 (2 ln 20 + ln 100) + 4)
    assert d["constants"]["cover_gap_bound"] > 0
    assert (tmp_path / "s_w.csv").exists() and (tmp_path / "s_f.csv").exists()


def test_evaluate_zero_rebates(tmp_path, capsys):
    f = tmp_path / "c0.json"
    f.write_text(json.dumps({"n": 3, "alpha": 0.5, "c": [0.0]}))
    code, out, _ = run(capsys, "evaluate", "--c-file", str(f), "--eval-samples", "30000")
    d = json.loads(out)
    closed = oracles.ssvcg_worst_ratio_closed(3, 0.5)
    assert code == 0
    assert closed - 0.01 < d["t_simulated"] <= closed + 1e-12
    assert {"t_simulated", "violation_fraction", "argmax_profile"} <= set(d)


def test_evaluate_optimized_superset(tmp_path, capsys):
    f = tmp_path / "o.json"
    assert run(capsys, "optimize", "--n", "4", "--alpha", "0.5", "--train-samples", "2000", "--out", str(f))[0] == 0
    code, out, _ = run(capsys, "evaluate", "--c-file", str(f), "--eval-samples", "5000", "--include-train")
    d = json.loads(out)
    assert code == 0
    assert d["t_simulated"] >= d["t_numerical"] - 1e-12


def test_evaluate_bad_file(tmp_path, capsys):
    f = tmp_path / "bad.json"
    f.write_text(json.dumps({"n": 4, "alpha": 0.5, "c": [0.1, -0.2]}))
    code, _, err = run(capsys, "evaluate", "--c-file", str(f))
    assert code == 2 and "partial sums" in err
    assert run(capsys, "evaluate", "--c-file", str(tmp_path / "missing.json"))[0] == 2
    f.write_text(json.dumps({"n": 4, "alpha": 0.5, "c": [0.1, 0.0]}))
    assert run(capsys, "evaluate", "--c-file", str(f), "--seed", "3", "--eval-seed", "3")[0] == 2


def test_sweep_csv_and_determinism(capsys, monkeypatch):
    args = ["sweep", "--n-range", "2:4", "--alpha", "0.5", "--alpha", "0.25",
            "--train-samples", "300", "--eval-samples", "1000"]
    code, out, _ = run(capsys, *args)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 7
    for line in lines[1:]:
        n, alpha, t_ssvcg, t_num, t_sim, t_scaled = line.split(",")
        assert float(t_ssvcg) == pytest.approx(oracles.ssvcg_worst_ratio_closed(int(n), float(alpha)), abs=1e-8)
        assert float(t_scaled) == pytest.approx(float(t_num) / (1 - float(alpha)), rel=1e-8)
        assert len(t_num.replace(".", "").lstrip("0")) <= 9
    monkeypatch.setenv("SSVCG_THREADS", "1")
    assert run(capsys, *args)[1] == out
    monkeypatch.setenv("SSVCG_THREADS", "0")
    assert run(capsys, *args)[0] == 2


def test_sweep_json(capsys):
    code, out, _ = run(capsys, "sweep", "--n", "3", "--alpha", "0.5", "--train-samples", "100",
                       "--eval-samples", "100", "--format", "json")
    rows = json.loads(out)
    assert code == 0 and rows[0]["n"] == 3


def test_check_default_and_fault(capsys):
    code, out, _ = run(capsys, "check")
    assert code == 0 and "8/8" in out
    code, out, _ = run(capsys, "check", "--inject-fault", "alpha_n", "--verbose")
    assert code == 1
    assert "FAIL rebate_sum_identity" in out
    assert "PASS oracle_agreement" in out


def test_equilibrium_command(tmp_path, capsys):
    f = tmp_path / "v.json"
    f.write_text(json.dumps([{"kind": "power", "w": 2.0, "beta": 0.5}] * 4))
    code, out, _ = run(capsys, "equilibrium", "--valuations", str(f), "--alpha", "0.5")
    d = json.loads(out)
    assert code == 0
    assert d["theta_ne"] == pytest.approx([2.0] * 4, abs=1e-10)
    assert all(r["vp_ok"] for r in d["vp_report"]) and all(r["is_br"] for r in d["br_report"])
    f.write_text(json.dumps([{"kind": "power", "w": 2.0, "beta": 0.5}, {"kind": "power", "w": 1.0, "beta": 0.5}]))
    d = json.loads(run(capsys, "equilibrium", "--valuations", str(f), "--alpha", "0.5")[1])
    assert d["theta_ne"] == pytest.approx([2.0, 1.0], abs=1e-8)
    f.write_text("[]")
    assert run(capsys, "equilibrium", "--valuations", str(f), "--alpha", "0.5")[0] == 2
