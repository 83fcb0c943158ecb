"""Pseudo-spectral engine against the exact symbolic oracle.

The Gaussian u = exp(-(x0^2 + x1^2 + t^2)) has Yu = (2t - 2 x0 x1) u in
closed form. The spectral apply_Y converges to it exponentially fast.
"""

import math

from kolmoreg.fields import OperatorSpec, gaussian, symbolic_apply
from kolmoreg.spectral import GridSpec, apply_L, l2_norm, multiplier_norm, parseval_norm, sample
from kolmoreg.structure import StructureMatrix

M = StructureMatrix((1, 1), [[[1]]])
u = gaussian(3)
print("Yu =", symbolic_apply(u, OperatorSpec(M)).to_json())

grid = GridSpec.for_structure(M, 8, 8, 64)
us = sample(u, grid)
print(f"|u| = {l2_norm(us):.12f}, closed form (pi/2)^(3/4) = {(math.pi / 2) ** 0.75:.12f}")
print(f"Parseval side: {parseval_norm(us):.12f}")

print("\n  n   rel. error of apply_Y   rel. error of apply_L (sigma=1/2)")
for n in (16, 24, 32, 48, 64):
    g = grid.with_n(n)
    us = sample(u, g)
    err = []
    for op in (OperatorSpec(M), OperatorSpec(M, "1/2")):
        exact = sample(symbolic_apply(u, op), g)
        err.append(l2_norm(apply_L(us, op) - exact) / l2_norm(exact))
    print(f"{n:4d}   {err[0]:.3e}              {err[1]:.3e}")

us = sample(u, grid)
print("\nfractional norms |D_1^s u| for a few s:")
for s in (0, 0.25, 0.5, 2 / 3, 1):
    print(f"  s={s:.3f}: {multiplier_norm(us, 1, s):.6f}")
