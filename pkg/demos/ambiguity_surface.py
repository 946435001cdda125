"""
Ambiguity surfaces of three classic waveforms
=============================================

An impulse, a constant (DC) sequence and the 13-chip Barker code, checked
against the brute-force oracle and the volume identity.
"""

import numpy as np

from graf import BARKER13, ambiguity, ambiguity_oracle, zero_doppler_cut

# An impulse has no delay structure: all its energy sits on the zero-delay row.
print(ambiguity([1, 0, 0, 0]).values)

# A constant sequence is the opposite, a ridge along zero Doppler.
print(ambiguity(np.ones(4)).values)

# Barker-13, periodically extended: peak 169 and every other lag at 1.
cut = zero_doppler_cut(ambiguity(BARKER13)).value
print("Barker-13 zero-Doppler cut:", np.round(cut, 9))

# The FFT pipeline and the literal double sum agree to rounding error.
rng = np.random.default_rng(0)
s = np.exp(1j * rng.uniform(-np.pi, np.pi, 16))
fast, slow = ambiguity(s).values, ambiguity_oracle(s).values
print("max |fast - oracle| / max:", np.max(np.abs(fast - slow)) / slow.max())

# Total volume is fixed by the signal energy, whatever the code.
e = np.sum(np.abs(s) ** 2)
print("volume / (N E^2):", fast.sum() / (16 * e * e))
