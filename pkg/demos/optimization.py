"""
Gradient descent against a genetic algorithm
============================================

Both optimizers minimize the same loss from the same kind of start. The
run is small (N = 64) so it finishes in seconds.
"""

from graf import (
    AdamConfig,
    GAConfig,
    Objective,
    Waveform,
    optimize_ga,
    optimize_gradient,
    random_phases,
    seeded_rng,
)

n, lam, seed = 64, 0.5, 3
start = Waveform.from_phases(random_phases(n, seeded_rng(seed)))

grad = optimize_gradient(start, Objective.experiment(lam), AdamConfig(iterations=300, seed=seed))
ga = optimize_ga(Objective.experiment(lam), GAConfig(population=30, generations=60, seed=seed), n)

for rec in (grad, ga):
    m = rec.final_metrics
    print(f"{rec.method:8s} loss {m['loss']:.4f}  PSL {m['psl_db']:.2f} dB  "
          f"spec var {m['spectral_variance']:.2e}  evals {rec.eval_count}  {rec.wall_seconds:.1f} s")

# Phase parameterization keeps every sample on the unit circle.
print("modulus error:", grad.final_metrics["max_modulus_error"])

# Traces hold one row per iteration or generation.
print(grad.trace_csv().splitlines()[:3])
