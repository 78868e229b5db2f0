"""
Semicircular moments of the field operators
===========================================

The vacuum moments of G = S + S^* follow the Catalan numbers for every
unit-modulus deformation; mixed moments are not tracial.
"""

import numpy as np

from qfock import FockContext, QFockSpace, QParams
from qfock.moments import catalan, moment_sequence, scalar_norm_sequence, traciality_values

rng = np.random.default_rng(1)
for trial in range(3):
    space = QFockSpace(FockContext(2, 5), QParams.random(2, rng))
    seq = moment_sequence(0, 10, space)
    print("moments:", np.round(seq, 12))
    print("traciality pair:", np.round(traciality_values(space), 12))

print("Catalan:", [catalan(k) for k in range(1, 6)])

# for one variable the truncated field is a tridiagonal matrix whose norm climbs to 2
for M, norm, exact in scalar_norm_sequence([2, 4, 8, 16]):
    print(f"M = {M:2d}: ||G|| = {norm:.6f}, 2 cos(pi/(M+2)) = {exact:.6f}")
