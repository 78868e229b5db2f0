"""
Finding the q-commuting part of a tuple
=======================================

Glue a q-commuting tuple to a small cyclic block that is not q-commuting,
and recover the first summand as the maximal q-commuting piece.
"""

import numpy as np

from qfock import maximal_q_piece
from qfock.dilation import counterexample_builder, counterexample_check, weyl_q

q = weyl_q(2)  # q_01 = -1
T = counterexample_builder(None, (0.5, 0.5), q, M=3)
print("total dimension:", T.dim)

piece = maximal_q_piece(T, q)
print("piece rank:", piece.rank, "after", piece.iterations, "closure sweeps")

# the projector is the identity on the first summand and zero on the block
p = piece.projector.matrix
print("weight on the cyclic block:", np.abs(p[-2:, -2:]).max())

# the defect range gains the whole two-dimensional block
report = counterexample_check(T, T.dim - 2, q)
for child in report.children:
    print(child)
