"""Boundedness of the transport estimate over a random family.

The ratio |D_1^s u| / (|D_0^beta u|^(1-s) |D_0^gamma Yu|^s) is evaluated on
50 seeded Gaussians with polynomial prefactors; its supremum is the empirical
stand-in for the constant, and it should not move under grid refinement.
"""

from kolmoreg.spectral import GridSpec
from kolmoreg.structure import StructureMatrix
from kolmoreg.verify import family_supremum, gaussian_family

M = StructureMatrix((1, 1), [[[1]]])
grid = GridSpec.for_structure(M, 8, 8, 48)
family = gaussian_family(grid, count=50, seed=0)
print("first member:", family[0].to_json())

print("\nbeta gamma   s     sup(n=48)  sup(n=96)  argmax")
for beta, gamma in [(1, 0), (2, 0), ("3/2", "1/2")]:
    coarse = family_supremum(family, M, beta, gamma, grid)
    fine = family_supremum(family, M, beta, gamma, grid.with_n(96))
    arg = max(range(len(family)), key=lambda k: fine.reports[k].ratio)
    print(f"{beta!s:4} {gamma!s:5} {fine.reports[0].s!s:5} {coarse.supremum:.6f}   {fine.supremum:.6f}   {arg}")
