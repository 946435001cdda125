"""
Gradients through the ambiguity function
========================================

Record a loss on a tape, run the reverse pass, and compare against finite
differences. Cotangents are dL/dz*, so the real-coordinate gradient is
``2 * g.real`` and ``2 * g.imag``.
"""

import numpy as np

from graf import Tape, ambiguity, grad_check, isl
from graf import autodiff as ad

rng = np.random.default_rng(1)
s = rng.normal(size=8) + 1j * rng.normal(size=8)

tape = Tape()
x = tape.leaf(s)
loss = isl(ambiguity(x, shifted=True))
g = tape.backward(loss)[x]
print("ISL:", loss.item())
print("dL/dRe(s):", np.round(2 * g.real, 5))

# One central difference by hand, for the first sample's real part.
h = 1e-6
bump = np.zeros(8)
bump[0] = h
fd = (isl(ambiguity(s + bump)).item() - isl(ambiguity(s - bump)).item()) / (2 * h)
print("finite difference:", fd, " tape:", 2 * g[0].real)

# grad_check does the same for every coordinate and returns the worst error.
print("worst relative error:", grad_check(lambda v: isl(ambiguity(v)), s))

# Sum of the surface is N * E^2, whose gradient is known in closed form.
err = grad_check(lambda v: ad.op_sum(ambiguity(v).chi), s)
print("sum-of-surface check:", err)
