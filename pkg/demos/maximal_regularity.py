"""Maximal regularity for Yu - sigma Delta_0 u = g.

For a fixed u the quotient (|Yu| + sigma |Delta_0 u|) / |g| stays bounded as
sigma varies, and the 2/3 gain |D_1^(2/3) u| sigma^(1/3) / |g| stays within a
narrow band.
"""

from fractions import Fraction as F

from kolmoreg.fields import FieldSpec, gaussian
from kolmoreg.spectral import GridSpec
from kolmoreg.structure import StructureMatrix
from kolmoreg.verify import maximal_regularity

M = StructureMatrix((1, 1), [[[1]]])
grid = GridSpec.for_structure(M, 8, 8, 48)

print("sigma   |Yu|      |D0u|     |g|       quotient  gain")
for sigma in (F(1, 8), F(1, 4), F(1, 2), 1, 2, 4):
    r = maximal_regularity(gaussian(3), M, sigma, grid)
    flag = "  (sigma = 1)" if r.sigma_is_one else ""
    print(f"{str(sigma):6} {r.yu_norm:.5f}  {r.laplacian_norm:.5f}  {r.g_norm:.5f}  "
          f"{r.quotient:.5f}   {r.gain_quotient:.5f}{flag}")

# when u does not depend on x1 or t, Yu = 0 and the quotient is exactly one
bump = FieldSpec.from_terms(3, [({(0, 0, 0): 1}, [0, 0, 0], [1, None, None])])
print("\nYu = 0 case, quotient:", maximal_regularity(bump, M, F(1, 2), grid).quotient)
