"""Self-check suites behind ``graf gradcheck`` and ``graf selftest``."""

import numpy as np

from . import autodiff as ad
from .ambiguity import BARKER13, ambiguity, ambiguity_oracle, zero_doppler_cut
from .losses import (
    DEFAULT_GAMMA,
    ExclusionRegion,
    LossSpec,
    ScenarioSet,
    constant_modulus_penalty,
    experiment_loss,
    isl,
    mainlobe_width_diff,
    match_loss,
    multi_scenario_loss,
    psl,
    spectral_variance,
)
from .optimizers import seeded_rng

GRAD_TOL = 1e-5


def random_signal(n, rng):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def _sidelobe_gap(s, region=ExclusionRegion()):
    """Relative gap between the two largest distinct sidelobe values."""
    surf = ambiguity(s, shifted=True)
    vals = np.unique(np.round(surf.values[region.sidelobe_mask(surf.n, "shifted")], 9))
    if vals.size < 2:
        return 0.0
    return (vals[-1] - vals[-2]) / vals[-1]


def gradcheck_losses(n, rng):
    """``{name: loss_fn}`` over a complex signal; targets drawn from ``rng``."""
    target = ambiguity(random_signal(n, rng), shifted=True).values
    two = ScenarioSet([
        (LossSpec([{"metric": "psl", "weight": 1.0}, {"metric": "isl", "weight": 0.1}]), 0.7),
        (LossSpec([{"metric": "spectral_variance", "weight": 2000.0},
                   {"metric": "constant_modulus", "weight": 1.0}]), 0.3),
    ])
    return {
        "sum_of_surface": lambda s: ad.op_sum(ambiguity(s).chi),
        "isl": lambda s: isl(ambiguity(s)),
        "psl": lambda s: psl(ambiguity(s, shifted=True)),
        "spectral_variance": spectral_variance,
        "constant_modulus": constant_modulus_penalty,
        "match": lambda s: match_loss(ambiguity(s, shifted=True), target),
        "mainlobe_width": lambda s: mainlobe_width_diff(_normalized_cut(s), DEFAULT_GAMMA),
        "experiment_lambda_0.5": lambda s: experiment_loss(s, 0.5),
        "two_scenario": lambda s: multi_scenario_loss(s, two),
    }


def _normalized_cut(s):
    cut = zero_doppler_cut(ambiguity(s, shifted=True))
    return ad.op_div_scalar(cut, ad.op_take(cut, cut.value.size // 2))


def run_gradcheck(sizes=(8, 16, 32), seeds=10, eps=1e-5, base_seed=0):
    """Worst finite-difference error per loss and size.

    PSL-based losses skip draws whose two largest sidelobes nearly tie.
    """
    report = {}
    for n in sizes:
        rng = seeded_rng(base_seed + n)
        losses = gradcheck_losses(n, rng)
        for name, fn in losses.items():
            worst, used = 0.0, 0
            while used < seeds:
                s = random_signal(n, rng)
                if name in ("psl", "experiment_lambda_0.5", "two_scenario") and _sidelobe_gap(s) < 1e-3:
                    continue
                worst = max(worst, ad.grad_check(fn, s, eps))
                used += 1
            report.setdefault(name, {})[str(n)] = worst
    passed = all(v <= GRAD_TOL for per in report.values() for v in per.values())
    return {"tolerance": GRAD_TOL, "passed": passed, "max_rel_error": report}


def run_selftest(trials=20, base_seed=0):
    """Oracle equivalence and surface invariants; returns ``(passed, failed, lines)``."""
    rng = seeded_rng(base_seed)
    lines = []

    def check(name, ok, detail=""):
        lines.append(f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
        return ok

    results = []
    worst = 0.0
    for n in (2, 3, 4, 5, 8, 13, 16):
        for _ in range(trials):
            s = random_signal(n, rng)
            a = ambiguity(s).values
            b = ambiguity_oracle(s).values
            worst = max(worst, np.max(np.abs(a - b)) / np.max(np.abs(b)))
    results.append(check("oracle_equivalence", worst <= 1e-10, f"max_rel={worst:.3e}"))

    vol = sym = peak = 0.0
    origin_ok = True
    for n in (4, 8, 16, 32, 64):
        for _ in range(trials):
            s = random_signal(n, rng)
            chi = ambiguity(s).values
            e = np.sum(np.abs(s) ** 2)
            vol = max(vol, abs(chi.sum() - n * e * e) / (n * e * e))
            peak = max(peak, abs(chi[0, 0] - e * e) / (e * e))
            idx = (-np.arange(n)) % n
            sym = max(sym, np.max(np.abs(chi - chi[np.ix_(idx, idx)])) / chi[0, 0])
            origin_ok &= bool(chi[0, 0] >= chi.max() * (1 - 1e-12))
    results.append(check("volume", vol <= 1e-10, f"max_rel={vol:.3e}"))
    results.append(check("origin_value", peak <= 1e-12, f"max_rel={peak:.3e}"))
    results.append(check("origin_is_max", origin_ok))
    results.append(check("point_symmetry", sym <= 1e-10, f"max={sym:.3e}"))

    cut = zero_doppler_cut(ambiguity(BARKER13)).value
    results.append(check("barker13_peak", abs(cut[0] - 169.0) < 1e-9, f"peak={cut[0]:.6g}"))

    impulse = ambiguity(np.array([1, 0, 0, 0])).values
    expect = np.zeros((4, 4))
    expect[0, :] = 1
    results.append(check("impulse_surface", np.allclose(impulse, expect, atol=1e-12)))

    passed = sum(results)
    return passed, len(results) - passed, lines
