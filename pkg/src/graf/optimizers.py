"""Waveform optimizers: Adam on the tape gradient and a genetic-algorithm baseline.

Both optimizers score candidates through the same :class:`Objective`, which
counts evaluations, so comparisons between them are like for like.

Randomness comes from :func:`seeded_rng`, a ``numpy.random.Generator`` on the
Philox4x64-10 counter-based bit generator. The stream for a given seed is
fixed by the algorithm, not by the platform.
"""

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .ambiguity import Waveform, ambiguity
from .complex_core import FLOAT_FMT, fft, ifft
from .errors import InvalidArgumentError, NumericalError
from .losses import (
    DEFAULT_ALPHA,
    ExclusionRegion,
    composite_loss,
    experiment_loss,
    multi_scenario_loss,
    psl,
    spectral_variance,
    to_db,
)

logger = logging.getLogger(__name__)

TRACE_HEADER = ("iter", "time_s", "loss", "psl_db", "spectral_variance")


def seeded_rng(seed):
    """Deterministic generator: Philox4x64-10 keyed from ``seed`` via SeedSequence."""
    return np.random.Generator(np.random.Philox(int(seed)))


def random_phases(n, rng):
    """I.i.d. uniform phases on ``[-pi, pi)``."""
    return rng.uniform(-np.pi, np.pi, size=n)


def wrap_phase(theta):
    """Map phases to ``[-pi, pi)``."""
    return (np.asarray(theta) + np.pi) % (2.0 * np.pi) - np.pi


# ----------------------------------------------------------------- objective


class Objective:
    """A loss ``f(s, phases) -> scalar Var`` plus an evaluation counter.

    ``region`` is the exclusion box used when reporting PSL in traces.
    """

    def __init__(self, fn, region=ExclusionRegion(), name="custom"):
        self.fn = fn
        self.region = region
        self.name = name
        self.evaluations = 0

    def __call__(self, s, phases=None):
        self.evaluations += 1
        return self.fn(s, phases)

    def value(self, waveform):
        """Gradient-free scalar loss of a :class:`Waveform`."""
        return float(self(waveform.samples, waveform.phases).item())

    @classmethod
    def experiment(cls, lam, alpha=DEFAULT_ALPHA, region=ExclusionRegion()):
        return cls(lambda s, phases: experiment_loss(s, lam, alpha, region), region, f"experiment(lambda={lam})")

    @classmethod
    def from_spec(cls, spec, region=ExclusionRegion()):
        return cls(lambda s, phases: composite_loss(s, spec, phases), region, "composite")

    @classmethod
    def from_scenarios(cls, scenario_set, region=ExclusionRegion()):
        return cls(lambda s, phases: multi_scenario_loss(s, scenario_set, phases), region, "multi_scenario")


def trace_metrics(samples, region=ExclusionRegion()):
    """``(psl_db, spectral_variance)`` of a signal, as plain floats."""
    p = psl(ambiguity(samples, shifted=True), region).item()
    return to_db(p), spectral_variance(samples).item()


# -------------------------------------------------------------------- Adam


@dataclass
class AdamConfig:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    iterations: int = 2000
    seed: int = 0

    def __post_init__(self):
        if not self.lr > 0:
            raise InvalidArgumentError("lr must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise InvalidArgumentError("beta1 and beta2 must lie in (0, 1)")
        if self.iterations < 0:
            raise InvalidArgumentError("iterations must be >= 0")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(state, theta, grad, t, cfg):
    """One bias-corrected Adam update; returns ``(new_theta, new_state)``."""
    grad = np.asarray(grad, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if grad.shape != theta.shape or state.m.shape != theta.shape:
        raise InvalidArgumentError("adam_step: shape mismatch")
    if t < 1:
        raise InvalidArgumentError("adam_step: t starts at 1")
    if not np.all(np.isfinite(grad)):
        raise NumericalError(f"non-finite gradient at Adam step {t}", op="adam_step")
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad * grad
    m_hat = m / (1.0 - cfg.beta1**t)
    v_hat = v / (1.0 - cfg.beta2**t)
    theta = theta - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return theta, AdamState(m, v, t)


# ------------------------------------------------------------- projections


def project_unit_modulus(s):
    """Scale each sample onto the unit circle; zero samples become ``1+0j``."""
    s = np.asarray(s, dtype=np.complex128)
    mag = np.abs(s)
    zero = mag == 0
    if zero.any():
        logger.warning("project_unit_modulus: %d zero sample(s) replaced by 1+0j", int(zero.sum()))
    return np.where(zero, 1.0 + 0j, s / np.where(zero, 1.0, mag))


def apply_spectral_mask(s, mask):
    """``ifft(mask * fft(s))`` for a real mask with entries in [0, 1]."""
    s = np.asarray(s, dtype=np.complex128)
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != s.shape:
        raise InvalidArgumentError(f"mask length {mask.shape} does not match signal {s.shape}")
    if np.any(mask < 0) or np.any(mask > 1):
        raise InvalidArgumentError("mask entries must lie in [0, 1]")
    return ifft(mask * fft(s))


# -------------------------------------------------------------- run record


@dataclass
class RunRecord:
    method: str
    config: dict
    seed: int
    trace: list = field(default_factory=list)
    eval_count: int = 0
    final_waveform: Waveform | None = None
    final_metrics: dict = field(default_factory=dict)
    status: str = "ok"
    message: str = ""

    @property
    def wall_seconds(self):
        return self.trace[-1][1] if self.trace else 0.0

    def trace_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for it, t, loss, pdb, sv in self.trace:
            w.writerow([it] + [FLOAT_FMT % x for x in (t, loss, pdb, sv)])
        return buf.getvalue()

    def to_dict(self):
        samples = self.final_waveform.samples if self.final_waveform is not None else np.array([])
        phases = None if self.final_waveform is None else self.final_waveform.phases
        return {
            "method": self.method,
            "status": self.status,
            "message": self.message,
            "seed": self.seed,
            "config": self.config,
            "eval_count": self.eval_count,
            "wall_seconds": self.wall_seconds,
            "final_metrics": self.final_metrics,
            "final_waveform": {
                "re": samples.real.tolist(),
                "im": samples.imag.tolist(),
                "phases": None if phases is None else phases.tolist(),
            },
            "trace": [list(row) for row in self.trace],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d):
        wf = d["final_waveform"]
        samples = np.array(wf["re"]) + 1j * np.array(wf["im"])
        waveform = None
        if samples.size:
            waveform = Waveform(samples, None if wf["phases"] is None else np.array(wf["phases"]))
        return cls(
            method=d["method"],
            config=d["config"],
            seed=d["seed"],
            trace=[tuple(row) for row in d["trace"]],
            eval_count=d["eval_count"],
            final_waveform=waveform,
            final_metrics=d["final_metrics"],
            status=d["status"],
            message=d.get("message", ""),
        )


def _final_metrics(waveform, objective):
    loss = objective.value(waveform)
    objective.evaluations -= 1  # reporting, not search
    psl_db, sv = trace_metrics(waveform.samples, objective.region)
    return {
        "loss": loss,
        "psl_linear": 10.0 ** (psl_db / 10.0),
        "psl_db": psl_db,
        "spectral_variance": sv,
        "max_modulus_error": float(np.max(np.abs(np.abs(waveform.samples) - 1.0))),
    }


# --------------------------------------------------------- gradient descent


def optimize_gradient(initial, objective, cfg=None, mode="phase_param"):
    """Adam on the tape gradient of ``objective``.

    ``mode="phase_param"`` optimizes the N phases with ``s = exp(1j*theta)``;
    ``mode="projected_complex"`` optimizes the 2N real coordinates of ``s``
    and projects onto the unit circle after each step. Trace row ``i`` holds
    the loss of the iterate that step ``i`` starts from.
    """
    cfg = cfg or AdamConfig()
    if mode not in ("phase_param", "projected_complex"):
        raise InvalidArgumentError(f"unknown mode {mode!r}")
    if not isinstance(initial, Waveform):
        initial = Waveform(initial)
    start_evals = objective.evaluations
    if mode == "phase_param":
        theta = initial.phases if initial.phases is not None else np.angle(initial.samples)
        params = np.array(theta, dtype=np.float64)
    else:
        s0 = project_unit_modulus(initial.samples)
        params = np.concatenate([s0.real, s0.imag])
    n = initial.samples.size
    state = AdamState.zeros(params.size)
    record = RunRecord("gradient", {"mode": mode, **asdict(cfg)}, cfg.seed)

    def current():
        if mode == "phase_param":
            return Waveform.from_phases(params)
        return Waveform(params[:n] + 1j * params[n:])

    t0 = time.perf_counter()
    for it in range(cfg.iterations):
        tape = ad.Tape()
        x = tape.leaf(params if mode == "phase_param" else params[:n] + 1j * params[n:])
        if mode == "phase_param":
            s, phases = ad.op_phase_to_signal(x), x
        else:
            s, phases = x, None
        loss = objective(s, phases)
        loss_value = float(loss.item())
        if not math.isfinite(loss_value):
            record.status, record.message = "failed", f"non-finite loss at iteration {it}"
            break
        cot = tape.backward(loss)[x]
        grad = cot if mode == "phase_param" else np.concatenate([2.0 * cot.real, 2.0 * cot.imag])
        psl_db, sv = trace_metrics(s.value, objective.region)
        record.trace.append((it, time.perf_counter() - t0, loss_value, psl_db, sv))
        try:
            params, state = adam_step(state, params, grad, it + 1, cfg)
        except NumericalError as exc:
            record.status, record.message = "failed", str(exc)
            break
        if mode == "projected_complex":
            z = project_unit_modulus(params[:n] + 1j * params[n:])
            params = np.concatenate([z.real, z.imag])
    if mode == "phase_param":
        params = wrap_phase(params)
    record.eval_count = objective.evaluations - start_evals
    record.final_waveform = current()
    record.final_metrics = _final_metrics(record.final_waveform, objective)
    return record


# -------------------------------------------------------- genetic algorithm


@dataclass
class GAConfig:
    population: int = 50
    generations: int = 300
    tournament_size: int = 3
    crossover_rate: float = 0.9
    mutation_sigma: float = 0.1
    mutation_rate: float | None = None  # None -> 1/N
    elitism: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise InvalidArgumentError("population must be >= 2")
        if self.generations < 1:
            raise InvalidArgumentError("generations must be >= 1")
        if self.tournament_size < 2:
            raise InvalidArgumentError("tournament_size must be >= 2")
        if not 0 <= self.crossover_rate <= 1:
            raise InvalidArgumentError("crossover_rate must lie in [0, 1]")
        if not self.mutation_sigma > 0:
            raise InvalidArgumentError("mutation_sigma must be positive")
        if self.mutation_rate is not None and not 0 <= self.mutation_rate <= 1:
            raise InvalidArgumentError("mutation_rate must lie in [0, 1]")
        if not 0 <= self.elitism < self.population:
            raise InvalidArgumentError("elitism must satisfy 0 <= elitism < population")


def _tournament(fitness, size, rng):
    entrants = rng.integers(0, fitness.size, size=size)
    best = np.min(fitness[entrants])
    return int(np.min(entrants[fitness[entrants] == best]))


def optimize_ga(objective, cfg=None, n=256, initial_population=None, executor=None):
    """Generational GA over phase vectors in ``[-pi, pi)^n``; lower loss is fitter.

    Each generation scores the whole population (so ``eval_count ==
    population * generations``), logs its best member, then breeds the next
    generation: elites copied unchanged, the rest from tournament-selected
    parents via per-gene uniform crossover and wrapped Gaussian mutation.
    Pass an ``executor`` to score individuals in parallel; results are
    consumed in individual order, so the outcome does not change.
    """
    cfg = cfg or GAConfig()
    rng = seeded_rng(cfg.seed)
    if initial_population is None:
        pop = random_phases((cfg.population, n), rng)
    else:
        pop = wrap_phase(np.array(initial_population, dtype=np.float64))
        if pop.shape != (cfg.population, n):
            raise InvalidArgumentError(f"initial population must have shape {(cfg.population, n)}")
    rate = cfg.mutation_rate if cfg.mutation_rate is not None else 1.0 / n
    config = asdict(cfg)
    config["mutation_rate"] = rate
    record = RunRecord("ga", config, cfg.seed)
    start_evals = objective.evaluations

    def score(theta):
        return float(objective(np.exp(1j * theta), theta).item())

    t0 = time.perf_counter()
    fitness = None
    for gen in range(cfg.generations):
        rows = pop if executor is None else list(pop)
        mapped = map(score, rows) if executor is None else executor.map(score, rows)
        fitness = np.fromiter(mapped, dtype=np.float64, count=cfg.population)
        fitness = np.where(np.isfinite(fitness), fitness, np.inf)
        best = int(np.argmin(fitness))
        psl_db, sv = trace_metrics(np.exp(1j * pop[best]), objective.region)
        record.trace.append((gen, time.perf_counter() - t0, float(fitness[best]), psl_db, sv))
        if gen == cfg.generations - 1:
            break
        order = np.argsort(fitness, kind="stable")
        children = [pop[i].copy() for i in order[: cfg.elitism]]
        while len(children) < cfg.population:
            a = pop[_tournament(fitness, cfg.tournament_size, rng)]
            b = pop[_tournament(fitness, cfg.tournament_size, rng)]
            if rng.random() < cfg.crossover_rate:
                child = np.where(rng.random(n) < 0.5, a, b)
            else:
                child = a.copy()
            hit = rng.random(n) < rate
            if hit.any():
                child = child + hit * rng.normal(0.0, cfg.mutation_sigma, size=n)
            children.append(wrap_phase(child))
        pop = np.array(children)
    best = int(np.argmin(fitness))
    record.eval_count = objective.evaluations - start_evals
    record.final_waveform = Waveform.from_phases(pop[best])
    record.final_metrics = _final_metrics(record.final_waveform, objective)
    return record
