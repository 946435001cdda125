"""
Waveform metrics and weighted losses
====================================

PSL, ISL and spectral variance for a random phase code, then a composite
loss built from a JSON description.
"""

import numpy as np

from graf import (
    LossSpec,
    ScenarioSet,
    ambiguity,
    composite_loss,
    experiment_loss,
    multi_scenario_loss,
    psl,
    spectral_variance,
    to_db,
)

rng = np.random.default_rng(2)
s = np.exp(1j * rng.uniform(-np.pi, np.pi, 64))
surface = ambiguity(s, shifted=True)

p = psl(surface).item()
print(f"PSL {p:.4f} ({to_db(p):.2f} dB), spectral variance {spectral_variance(s).item():.3e}")

# The study loss: PSL plus lambda * alpha * spectral variance.
for lam in (0.0, 0.5, 2.0):
    print(f"lambda={lam}: loss {experiment_loss(s, lam).item():.4f}")

# Any weighted mix of metrics can be described in JSON.
spec = LossSpec.from_json("""
{"terms": [{"metric": "psl", "weight": 1.0, "params": {"g_k": 2, "g_m": 1}},
           {"metric": "isl", "weight": 0.01},
           {"metric": "mainlobe_width", "weight": 0.1}],
 "gamma": 50}
""")
print("composite:", composite_loss(s, spec).item())

# Scenarios weight whole specs against each other.
scenarios = ScenarioSet([(spec, 0.7), (LossSpec([{"metric": "spectral_variance", "weight": 2000}]), 0.3)])
print("two scenarios:", multi_scenario_loss(s, scenarios).item())
