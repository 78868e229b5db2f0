"""
Dilating a pure q-commuting pair
================================

Scale a Weyl pair below the unit sphere, build the block model of its
isometric dilation, and compare its q-commuting piece with the creation
tuple on the q-commuting Fock space.
"""

from qfock import main_theorem_check, weyl_pair_generator, weyl_q
from qfock.dilation import noncommuting_dilation, purity_deficit

r, M = 0.5, 6
T = weyl_pair_generator(2, r)
q = weyl_q(2)

# sum over words of length m of T^a (T^a)^* decays like r^(2m)
for m in (1, 3, M + 1):
    print(f"purity deficit at level {m}: {purity_deficit(T, m):.3e}")

R, space = noncommuting_dilation(T, M)
print("dilation space dimension:", space.total_dim)

report = main_theorem_check(T, q, M, eps_tail=1e-3)
for stage in report.children:
    print(stage)
print("piece rank:", report.details["piece_rank"])
