import itertools
import json
import os
import statistics
import time

import numpy as np
import pytest

from graf.ambiguity import Waveform
from graf.errors import InvalidArgumentError
from graf.experiment import (
    PARETO_HEADER,
    ParetoPoint,
    SweepConfig,
    dominates,
    emit_spectrum,
    load_records,
    pareto_filter,
    read_pareto_csv,
    read_spectrum,
    run_sweep,
    summarize,
)
from graf.optimizers import AdamConfig, GAConfig

from conftest import crandn


def smoke_config(tmp_path, **kw):
    base = dict(
        N=64, lambdas=[0.0, 1.0], seeds=[0],
        adam=AdamConfig(iterations=200), ga=GAConfig(generations=30),
        output_dir=str(tmp_path / "sweep"),
    )
    base.update(kw)
    return SweepConfig(**base)


# --- spectra


def test_spectrum_examples(tmp_path):
    p = read_spectrum(emit_spectrum(np.array([1, 0, 0, 0, 0]), tmp_path / "imp.csv"))
    np.testing.assert_allclose(p, 0.2, atol=1e-15)
    p = read_spectrum(emit_spectrum(Waveform(np.ones(6)), tmp_path / "ones.csv"))
    np.testing.assert_allclose(p, [1, 0, 0, 0, 0, 0], atol=1e-15)
    text = (tmp_path / "ones.csv").read_text().splitlines()
    assert text[0] == "bin,power" and len(text) == 7


def test_spectrum_round_trip(tmp_path, rng):
    s = crandn(rng, 33)
    p = read_spectrum(emit_spectrum(s, tmp_path / "r.csv"))
    power = np.abs(np.fft.fft(s)) ** 2
    assert len(p) == 33
    assert np.max(np.abs(p - power / power.sum())) <= 1e-12


def test_spectrum_io_error(tmp_path):
    with pytest.raises(OSError, match="nodir"):
        emit_spectrum(np.ones(4), tmp_path / "nodir" / "x.csv")


# --- pareto


def brute_front(pts):
    return [p for p in pts if not any(dominates(q, p) for q in pts)]


def test_pareto_examples():
    assert sorted(pareto_filter([(1, 2), (2, 1)])) == [(1, 2), (2, 1)]
    assert pareto_filter([(1, 1), (2, 2)]) == [(1, 1)]
    assert pareto_filter([]) == []


def test_pareto_against_brute_force(rng):
    for trial in range(20):
        pts = [tuple(x) for x in rng.integers(0, 12, size=(100, 2)).astype(float)]
        assert sorted(pareto_filter(pts)) == sorted(brute_front(pts))


def test_pareto_order_invariant(rng):
    pts = [tuple(x) for x in rng.uniform(size=(60, 2))]
    ref = pareto_filter(pts)
    for _ in range(10):
        rng.shuffle(pts)
        assert pareto_filter(pts) == ref


def test_pareto_duplicates_kept():
    assert pareto_filter([(1, 1), (1, 1), (2, 0.5), (3, 3)]) == [(1, 1), (1, 1), (2, 0.5)]


def test_pareto_points():
    a = ParetoPoint(0.5, "gradient", 0.01, 1e-6, 0.012, 3.0, 0)
    b = ParetoPoint(0.5, "ga", 0.02, 2e-6, 0.024, 4.0, 0)
    assert a.psl_db == pytest.approx(-20.0)
    assert pareto_filter([b, a]) == [a]


# --- config


def test_config_from_dict():
    cfg = SweepConfig.from_dict({"n": 32, "lambdas": [0.5], "adam": {"iterations": 5}, "ga": {"population": 4}})
    assert cfg.N == 32 and cfg.adam.iterations == 5 and cfg.ga.population == 4
    assert SweepConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(InvalidArgumentError, match="unknown"):
        SweepConfig.from_dict({"lambda": [0.5]})
    with pytest.raises(InvalidArgumentError):
        SweepConfig(lambdas=[])
    with pytest.raises(InvalidArgumentError):
        SweepConfig(N=4)


# --- sweep


def test_smoke_sweep(tmp_path):
    cfg = smoke_config(tmp_path)
    t = time.perf_counter()
    report = run_sweep(cfg)
    elapsed = time.perf_counter() - t
    print(f"smoke sweep: {elapsed:.1f} s")
    assert elapsed < 60
    out = tmp_path / "sweep"
    names = sorted(p.name for p in (out / "runs").iterdir())
    assert names == sorted(
        f"{m}_{lam}_0.{ext}" for m in ("gradient", "ga") for lam in ("0.0", "1.0") for ext in ("csv", "json")
    )
    assert sorted(p.name for p in (out / "spectra").iterdir()) == ["0.0.csv", "1.0.csv"]
    summary = json.loads((out / "summary.json").read_text())
    assert [e["lambda"] for e in summary["per_lambda"]] == [0.0, 1.0]
    assert summary["config"]["N"] == 64
    rows = read_pareto_csv(out / "pareto.csv")
    assert list(rows[0]) == list(PARETO_HEADER) and len(rows) == 4
    for e in report.summary:
        assert e["ga"]["eval_count"] == 50 * 30 and e["gradient"]["eval_count"] == 200
        assert e["speedup"] == pytest.approx(e["ga"]["time_s"] / e["gradient"]["time_s"])
        assert e["psl_improvement_db"] == pytest.approx(e["ga"]["psl_db"] - e["gradient"]["psl_db"])


def test_single_lambda(tmp_path):
    cfg = smoke_config(tmp_path, N=16, lambdas=[0], adam=AdamConfig(iterations=5), ga=GAConfig(population=4, generations=3))
    report = run_sweep(cfg)
    assert len(report.summary) == 1 and report.summary[0]["lambda"] == 0.0


def test_run_counts_and_recomputable_medians(tmp_path):
    cfg = smoke_config(
        tmp_path, N=16, lambdas=[0.0, 0.5, 2.0], seeds=[0, 1, 2],
        adam=AdamConfig(iterations=10), ga=GAConfig(population=6, generations=4),
    )
    run_sweep(cfg)
    out = tmp_path / "sweep"
    records = load_records(out)
    for method in ("gradient", "ga"):
        assert sum(r.method == method for _, r in records) == 3 * 3
    summary = json.loads((out / "summary.json").read_text())["per_lambda"]
    assert summary == json.loads(json.dumps(summarize(records)))
    for entry in summary:
        runs = [r for lam, r in records if lam == entry["lambda"] and r.method == "gradient"]
        assert entry["gradient"]["psl_db"] == statistics.median(r.final_metrics["psl_db"] for r in runs)


def test_emitted_csv_round_trip(tmp_path):
    report = run_sweep(smoke_config(
        tmp_path, N=16, lambdas=[0.25], adam=AdamConfig(iterations=8), ga=GAConfig(population=4, generations=3)))
    out = tmp_path / "sweep"
    for lam, rec in report.records:
        lines = (out / "runs" / f"{rec.method}_0.25_0.csv").read_text().splitlines()[1:]
        parsed = [tuple(float(x) for x in line.split(",")) for line in lines]
        for got, want in zip(parsed, rec.trace):
            assert got[0] == want[0]
            assert max(abs(a - b) / max(abs(b), 1e-300) for a, b in zip(got[1:], want[1:])) <= 1e-12
    rows = read_pareto_csv(out / "pareto.csv")
    by_method = {p.method: p for p in report.points}
    for row in rows:
        p = by_method[row["method"]]
        assert float(row["psl_linear"]) == p.psl_linear and float(row["spectral_variance"]) == p.spectral_variance


@pytest.mark.skipif(os.geteuid() == 0, reason="root can write anywhere")
def test_unwritable_output_dir(tmp_path):
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    with pytest.raises(OSError, match="not writable"):
        run_sweep(smoke_config(tmp_path, output_dir=str(locked / "out")))


def test_output_path_is_a_file(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    t = time.perf_counter()
    with pytest.raises(OSError, match="not writable"):
        run_sweep(smoke_config(tmp_path, output_dir=str(blocker / "out")))
    assert time.perf_counter() - t < 1.0  # fails before any run starts


def test_failed_run_is_recorded(tmp_path, monkeypatch):
    import graf.experiment as ex

    def boom(*args, **kwargs):
        raise FloatingPointError("synthetic")

    monkeypatch.setattr(ex, "optimize_ga", boom)
    cfg = smoke_config(tmp_path, N=16, lambdas=[0.5], adam=AdamConfig(iterations=4))
    report = run_sweep(cfg)
    statuses = {r.method: r.status for _, r in report.records}
    assert statuses == {"gradient": "ok", "ga": "failed"}
    rec = json.loads((tmp_path / "sweep" / "runs" / "ga_0.5_0.json").read_text())
    assert rec["status"] == "failed" and "synthetic" in rec["message"]
    entry = report.summary[0]
    assert entry["ga"]["failed"] == 1 and entry["speedup"] is None
    assert len(read_pareto_csv(tmp_path / "sweep" / "pareto.csv")) == 1


def test_parallel_matches_sequential(tmp_path):
    kw = dict(N=16, lambdas=[0.0, 1.0], seeds=[0, 1], adam=AdamConfig(iterations=6),
              ga=GAConfig(population=4, generations=3))
    seq = run_sweep(smoke_config(tmp_path, output_dir=str(tmp_path / "a"), **kw))
    par = run_sweep(smoke_config(tmp_path, output_dir=str(tmp_path / "b"), parallel=True, **kw))
    for (la, ra), (lb, rb) in itertools.zip_longest(seq.records, par.records):
        assert la == lb and ra.method == rb.method
        np.testing.assert_array_equal(ra.final_waveform.samples, rb.final_waveform.samples)
