"""
A small lambda sweep
====================

Trades PSL against spectral flatness at a desk-friendly scale. The full
study uses N = 256, 2000 Adam steps and a 50 x 300 GA; pass the defaults
(or run ``graf sweep``) for that.
"""

import json
import tempfile
from pathlib import Path

from graf import AdamConfig, GAConfig, SweepConfig, run_sweep

out = Path(tempfile.mkdtemp(prefix="graf-demo-"))
cfg = SweepConfig(
    N=64,
    lambdas=[0.0, 0.5, 2.0],
    seeds=[0, 1],
    adam=AdamConfig(iterations=200),
    ga=GAConfig(generations=30),
    output_dir=str(out),
)
report = run_sweep(cfg)

for e in report.summary:
    g, a = e["gradient"], e["ga"]
    print(f"lambda {e['lambda']:4}: gradient {g['psl_db']:6.2f} dB / {g['spectral_variance']:.2e}, "
          f"GA {a['psl_db']:6.2f} dB / {a['spectral_variance']:.2e}, speedup {e['speedup']:.2f}x")

print("wrote", sorted(p.name for p in out.iterdir()))
print(json.dumps(report.summary[0]["gradient"], indent=1))
