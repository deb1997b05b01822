"""Building the 4x4 code and looking at why it decodes cheaply.

Run: python3 demos/01_code_structure.py
"""

import numpy as np

from stbc4x4 import (assemble_codeword, equivalent_channel,
                     hurwitz_radon_check, make_proposed_code,
                     sample_rayleigh)

code = make_proposed_code()
print(f"phi = {code.phi:.6f} rad, {code.n_real} real symbols per 4x4 codeword")

# Codeword for the all-ones symbol vector.
np.set_printoptions(precision=3, suppress=True)
print(assemble_codeword(code, np.ones(8)))

# Which weight-matrix pairs satisfy the Hurwitz-Radon identities?
table = np.array([[hurwitz_radon_check(code, i, j) for j in range(8)]
                  for i in range(8)], dtype=int)
print("Hurwitz-Radon table (1 = holds), symbols x1..x8:")
print(table)

# The consequence: columns 1..6 of the equivalent channel are mutually
# real-orthogonal for any H, and all share the norm ||H||_F^2.
h = sample_rayleigh(4, 1, seed=7)
eq = equivalent_channel(code, h)
gram = (eq.hcal.conj().T @ eq.hcal).real
print(f"||H||^2 = {h.fro_norm_sq:.4f}")
print("Re(Hcal^H Hcal) / ||H||^2:")
print(gram / h.fro_norm_sq)
