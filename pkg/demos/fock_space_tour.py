"""
The truncated q-commuting Fock space
====================================

Build the fixed spaces of the twisted permutation action, check their
dimensions against the bosonic count and look at the compressed creation
operators.
"""

import math

import numpy as np

from qfock import FockContext, QFockSpace, QParams
from qfock.fock import multi_indices
from qfock.linalg import dagger

# two variables with q_01 = i, words up to length 4
q = QParams.uniform(2, np.pi / 2)
space = QFockSpace(FockContext(2, 4), q)

# each level keeps m + 1 of its 2^m words
for m, block in enumerate(space.blocks):
    rank = int(round(np.trace(block).real))
    print(f"level {m}: {block.shape[0]:2d} words, fixed space of dimension {rank} (expected {math.comb(m + 1, m)})")

# the compressed creations satisfy S_1 S_0 = q_01 S_0 S_1
S0, S1 = space.shifts
print("q-commutation residual:", np.max(np.abs(S1 @ S0 - q[0, 1] * S0 @ S1)))

# monomial norms are multinomial: ||S^k w||^2 = k_0! k_1! / |k|!
for k in multi_indices(2, 3, min_total=3):
    v = space.monomial_coords(k)
    print(f"k = {k}: ||S^k w||^2 = {np.vdot(v, v).real:.6f}")

# the number operator sum S_i^* S_i is diagonal on monomials
total = sum(dagger(s) @ s for s in space.shifts)
v = space.monomial_coords((1, 0))
print("eigenvalue on S_0 w:", np.vdot(v, total @ v).real)
