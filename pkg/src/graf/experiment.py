"""Joint PSL / spectral-flatness study: gradient runs vs. the GA across a lambda sweep.

Output layout under ``output_dir``::

    runs/<method>_<lambda>_<seed>.csv    trace (iter,time_s,loss,psl_db,spectral_variance)
    runs/<method>_<lambda>_<seed>.json   full RunRecord
    pareto.csv                            one row per run, frontier flag per method
    summary.json                          per-lambda medians, speedup, PSL improvement
    spectra/<lambda>.csv                  normalized power spectrum (bin,power)
"""

import csv
import json
import logging
import math
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .ambiguity import Waveform
from .complex_core import FLOAT_FMT, fft
from .errors import InvalidArgumentError
from .losses import DEFAULT_ALPHA, ExclusionRegion
from .optimizers import (
    AdamConfig,
    GAConfig,
    Objective,
    RunRecord,
    optimize_ga,
    optimize_gradient,
    random_phases,
    seeded_rng,
)

logger = logging.getLogger(__name__)

PARETO_HEADER = (
    "lambda", "method", "psl_linear", "psl_db", "spectral_variance",
    "combined_loss", "time_s", "seed", "frontier",
)


@dataclass
class SweepConfig:
    N: int = 256
    lambdas: list = field(default_factory=lambda: [0.0, 0.25, 0.5, 1.0, 2.0])
    alpha: float = DEFAULT_ALPHA
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    adam: AdamConfig = field(default_factory=AdamConfig)
    ga: GAConfig = field(default_factory=GAConfig)
    exclusion: ExclusionRegion = field(default_factory=ExclusionRegion)
    output_dir: str = "graf-sweep"
    parallel: bool = False

    def __post_init__(self):
        if not self.lambdas:
            raise InvalidArgumentError("lambdas must be non-empty")
        if self.N < 8:
            raise InvalidArgumentError("N must be >= 8")
        if not self.seeds:
            raise InvalidArgumentError("seeds must be non-empty")

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "n" in d and "N" not in d:
            d["N"] = d.pop("n")
        if isinstance(d.get("adam"), dict):
            d["adam"] = AdamConfig(**d["adam"])
        if isinstance(d.get("ga"), dict):
            d["ga"] = GAConfig(**d["ga"])
        if isinstance(d.get("exclusion"), dict):
            d["exclusion"] = ExclusionRegion(**d["exclusion"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidArgumentError(f"unknown sweep config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self):
        return asdict(self)


@dataclass
class ParetoPoint:
    lam: float
    method: str
    psl_linear: float
    spectral_variance: float
    combined_loss: float
    time_s: float
    seed: int
    psl_db: float = field(init=False)

    def __post_init__(self):
        self.psl_db = 10.0 * math.log10(self.psl_linear)

    @classmethod
    def from_record(cls, lam, record):
        m = record.final_metrics
        return cls(lam, record.method, m["psl_linear"], m["spectral_variance"],
                   m["loss"], record.wall_seconds, record.seed)


def _objectives(p):
    if isinstance(p, ParetoPoint):
        return (p.psl_linear, p.spectral_variance)
    return tuple(p)


def dominates(a, b):
    """``a`` is no worse than ``b`` on both axes and strictly better on one."""
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def pareto_filter(points):
    """Non-dominated subset (both axes minimized), sorted by the objective pair.

    Accepts :class:`ParetoPoint` objects or ``(psl, spectral_variance)``
    pairs. Sorting makes the result independent of input order.
    """
    pts = sorted(points, key=_objectives)
    front = []
    best_second = math.inf
    # sorted by first axis then second: a point is kept iff its second axis
    # beats every earlier point with a strictly smaller pair
    for i, p in enumerate(pts):
        a = _objectives(p)
        if a[1] < best_second:
            front.append(p)
            best_second = a[1]
        elif a[1] == best_second and front and _objectives(front[-1]) == a:
            front.append(p)  # exact duplicate of a frontier point
    return front


def normalized_spectrum(samples):
    power = np.abs(fft(np.asarray(samples, dtype=np.complex128))) ** 2
    total = power.sum()
    if total <= 0:
        raise InvalidArgumentError("spectrum of an all-zero signal is undefined")
    return power / total


def emit_spectrum(waveform, path):
    """Write the normalized power spectrum as ``bin,power`` CSV."""
    if isinstance(waveform, Waveform):
        waveform = waveform.samples
    p = normalized_spectrum(waveform)
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("bin", "power"))
            for k, v in enumerate(p):
                w.writerow((k, FLOAT_FMT % v))
    except OSError as exc:
        raise OSError(f"cannot write spectrum to {path}: {exc}") from exc
    return path


def read_spectrum(path):
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    return np.array([float(r["power"]) for r in rows])


def _lam_tag(lam):
    return repr(float(lam))


def _check_writable(out):
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc


def _median(xs):
    return statistics.median(xs) if xs else None


def summarize(records):
    """Per-lambda medians from ``[(lam, RunRecord), ...]``; failed runs are skipped."""
    by_lam = {}
    for lam, rec in records:
        by_lam.setdefault(float(lam), {"gradient": [], "ga": []})[rec.method].append(rec)
    out = []
    for lam in sorted(by_lam):
        entry = {"lambda": lam}
        for method, recs in by_lam[lam].items():
            ok = [r for r in recs if r.status == "ok"]
            entry[method] = {
                "runs": len(recs),
                "failed": len(recs) - len(ok),
                "psl_linear": _median([r.final_metrics["psl_linear"] for r in ok]),
                "psl_db": _median([r.final_metrics["psl_db"] for r in ok]),
                "spectral_variance": _median([r.final_metrics["spectral_variance"] for r in ok]),
                "combined_loss": _median([r.final_metrics["loss"] for r in ok]),
                "time_s": _median([r.wall_seconds for r in ok]),
                "eval_count": _median([r.eval_count for r in ok]),
            }
        g, a = entry["gradient"], entry["ga"]
        if g["time_s"] and a["time_s"] is not None:
            entry["speedup"] = a["time_s"] / g["time_s"]
        else:
            entry["speedup"] = None
        if g["psl_db"] is not None and a["psl_db"] is not None:
            entry["psl_improvement_db"] = a["psl_db"] - g["psl_db"]
        else:
            entry["psl_improvement_db"] = None
        out.append(entry)
    return out


@dataclass
class SweepReport:
    config: SweepConfig
    records: list  # [(lam, RunRecord)]
    points: list
    summary: list


def _run_pair(cfg, lam, seed):
    region = cfg.exclusion
    n = cfg.N
    init = Waveform.from_phases(random_phases(n, seeded_rng(seed)))
    adam = AdamConfig(**{**asdict(cfg.adam), "seed": seed})
    ga = GAConfig(**{**asdict(cfg.ga), "seed": seed})
    out = []
    for method in ("gradient", "ga"):
        objective = Objective.experiment(lam, cfg.alpha, region)
        try:
            if method == "gradient":
                rec = optimize_gradient(init, objective, adam)
            else:
                rec = optimize_ga(objective, ga, n)
        except Exception as exc:  # a failed run must not abort the sweep
            logger.exception("%s run lambda=%s seed=%s failed", method, lam, seed)
            rec = RunRecord(method, {}, seed, status="failed", message=repr(exc))
        rec.config["lambda"] = lam
        rec.config["alpha"] = cfg.alpha
        out.append(rec)
    return out


def run_sweep(cfg, progress=None):
    """Run one gradient and one GA run per (lambda, seed) and write all outputs.

    Runs execute sequentially unless ``cfg.parallel`` is set; sequential mode
    keeps wall-clock comparisons clean.
    """
    out = Path(cfg.output_dir)
    _check_writable(out)
    (out / "runs").mkdir(exist_ok=True)
    (out / "spectra").mkdir(exist_ok=True)

    jobs = [(lam, seed) for lam in cfg.lambdas for seed in cfg.seeds]
    if cfg.parallel:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor() as pool:
            results = list(pool.map(_run_pair, [cfg] * len(jobs), *zip(*jobs)))
    else:
        results = []
        for lam, seed in jobs:
            results.append(_run_pair(cfg, lam, seed))
            if progress:
                progress(lam, seed, results[-1])

    records = []
    for (lam, seed), pair in zip(jobs, results):
        for rec in pair:
            records.append((lam, rec))
            # names like gradient_0.5_3 contain dots, so never use with_suffix here
            stem = f"{rec.method}_{_lam_tag(lam)}_{seed}"
            (out / "runs" / f"{stem}.csv").write_text(rec.trace_csv())
            (out / "runs" / f"{stem}.json").write_text(rec.to_json())

    points = [ParetoPoint.from_record(lam, r) for lam, r in records if r.status == "ok"]
    frontier = {m: {id(p) for p in pareto_filter([q for q in points if q.method == m])}
                for m in ("gradient", "ga")}
    with (out / "pareto.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PARETO_HEADER)
        for p in points:
            w.writerow([
                FLOAT_FMT % p.lam, p.method, FLOAT_FMT % p.psl_linear, FLOAT_FMT % p.psl_db,
                FLOAT_FMT % p.spectral_variance, FLOAT_FMT % p.combined_loss,
                FLOAT_FMT % p.time_s, p.seed, int(id(p) in frontier[p.method]),
            ])

    summary = summarize(records)
    (out / "summary.json").write_text(
        json.dumps({"config": cfg.to_dict(), "per_lambda": summary}, indent=1)
    )

    for lam in cfg.lambdas:
        grads = [r for l_, r in records if l_ == lam and r.method == "gradient" and r.status == "ok"]
        if grads:
            # spectrum of the median-loss gradient solution
            grads.sort(key=lambda r: r.final_metrics["loss"])
            emit_spectrum(grads[(len(grads) - 1) // 2].final_waveform, out / "spectra" / f"{_lam_tag(lam)}.csv")

    return SweepReport(cfg, records, points, summary)


def load_records(output_dir):
    """Re-read every ``runs/*.json`` as ``[(lam, RunRecord)]``."""
    records = []
    for path in sorted(Path(output_dir, "runs").glob("*.json")):
        rec = RunRecord.from_dict(json.loads(path.read_text()))
        records.append((float(rec.config.get("lambda", path.stem.split("_")[1])), rec))
    return records


def read_pareto_csv(path):
    with Path(path).open() as fh:
        return list(csv.DictReader(fh))
