import json

import numpy as np
import pytest

from graf.cli import main
from graf.complex_core import read_matrix_csv, read_waveform_csv, write_waveform_csv


def test_selftest(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "0 failed" in out and "PASS oracle_equivalence" in out


def test_ambiguity_impulse(tmp_path):
    wave = write_waveform_csv(tmp_path / "impulse.csv", np.array([1, 0, 0, 0], dtype=complex))
    out = tmp_path / "chi.csv"
    assert main(["ambiguity", "--input", str(wave), "--output", str(out), "--quiet"]) == 0
    chi, meta = read_matrix_csv(out)
    expect = np.zeros((4, 4))
    expect[0] = 1
    np.testing.assert_allclose(chi, expect, atol=1e-14)
    assert meta == {"n": 4, "layout": "raw"}


def test_ambiguity_shifted_into_output_dir(tmp_path):
    wave = write_waveform_csv(tmp_path / "ones.csv", np.ones(4, dtype=complex))
    rc = main(["ambiguity", "--input", str(wave), "--shifted", "--normalize",
               "--output-dir", str(tmp_path / "o"), "--quiet"])
    assert rc == 0
    chi, meta = read_matrix_csv(tmp_path / "o" / "chi.csv")
    assert meta["layout"] == "shifted" and chi.max() == 1.0


def test_usage_errors(capsys):
    assert main(["selftest", "--bogus"]) == 2
    assert "usage" in capsys.readouterr().err
    assert main([]) == 2
    assert main(["transmogrify"]) == 2


def test_missing_input_is_runtime_error(tmp_path, capsys):
    assert main(["ambiguity", "--input", str(tmp_path / "nope.csv"), "--quiet"]) == 1
    assert "nope.csv" in capsys.readouterr().err


def test_gradcheck(capsys):
    assert main(["gradcheck"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] and report["tolerance"] == 1e-5
    assert set(report["max_rel_error"]["psl"]) == {"8", "16", "32"}


def test_optimize(tmp_path):
    rc = main(["optimize", "--n", "32", "--iterations", "20", "--lambda", "0.5",
               "--seed", "3", "--output-dir", str(tmp_path), "--quiet"])
    assert rc == 0
    rec = json.loads((tmp_path / "gradient_3.json").read_text())
    assert rec["eval_count"] == 20 and rec["config"]["lr"] == 0.01
    assert len((tmp_path / "gradient_3.csv").read_text().splitlines()) == 21
    s = read_waveform_csv(tmp_path / "gradient_3_waveform.csv")
    assert np.max(np.abs(np.abs(s) - 1)) <= 1e-12


def test_optimize_from_input_and_spec(tmp_path):
    wave = write_waveform_csv(tmp_path / "w.csv", np.exp(1j * np.linspace(0, 3, 16)))
    spec = tmp_path / "loss.json"
    spec.write_text(json.dumps({"terms": [{"metric": "isl", "weight": 1.0}]}))
    rc = main(["optimize", "--input", str(wave), "--config", str(spec), "--iterations", "5",
               "--mode", "projected_complex", "--output-dir", str(tmp_path), "--quiet"])
    assert rc == 0
    rec = json.loads((tmp_path / "gradient_0.json").read_text())
    assert rec["config"]["mode"] == "projected_complex"


def test_ga(tmp_path):
    rc = main(["ga", "--n", "16", "--population", "6", "--generations", "4",
               "--output-dir", str(tmp_path), "--quiet"])
    assert rc == 0
    assert json.loads((tmp_path / "ga_0.json").read_text())["eval_count"] == 24


def test_sweep(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"N": 16, "lambdas": [0.0, 2.0], "seeds": [0],
                               "adam": {"iterations": 5}, "ga": {"population": 4, "generations": 2}}))
    rc = main(["sweep", "--config", str(cfg), "--output-dir", str(tmp_path / "s"), "--quiet"])
    assert rc == 0
    summary = json.loads((tmp_path / "s" / "summary.json").read_text())
    assert [e["lambda"] for e in summary["per_lambda"]] == [0.0, 2.0]
    rc = main(["sweep", "--config", str(cfg), "--lambda", "0.5", "--seed", "2",
               "--output-dir", str(tmp_path / "t"), "--quiet"])
    assert rc == 0
    assert (tmp_path / "t" / "runs" / "ga_0.5_2.json").exists()


def test_sweep_bad_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"lambda": [1.0]}))
    assert main(["sweep", "--config", str(cfg), "--quiet"]) == 1
    assert "unknown sweep config keys" in capsys.readouterr().err


@pytest.mark.parametrize("flag", ["--seed", "--n"])
def test_global_flags_before_subcommand(tmp_path, flag):
    rc = main([flag, "7", "ga", "--n", "8", "--population", "3", "--generations", "2",
               "--output-dir", str(tmp_path), "--quiet"])
    assert rc == 0
