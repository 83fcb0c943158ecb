"""Exact algebra of the drift matrix.

Walks through the Fokker-Planck matrix and a skewed 2x2 block: validation,
the Kalman rank, the pivot reduction, recovering every d/dx^(1)_i from the
brackets [d/dx^(0)_k, Y], and the exponent law s = beta / (1 - gamma + beta).
"""

from fractions import Fraction as F

from kolmoreg.structure import (
    StructureMatrix,
    brackets_to_derivatives,
    dilation_law,
    fokker_planck,
    interpolation_theta,
    kalman_rank,
    pivot_form,
    recover_derivative,
    sobolev_exponent,
    toy_model,
    validate_structure,
)

fp = fokker_planck(2)
print("Fokker-Planck d=2:", validate_structure(fp).summary(), "kalman_rank =", kalman_rank(fp))

bad = StructureMatrix((2, 2), [[[1, 0], [2, 0]]])
print("rank-deficient block:", validate_structure(bad).summary())
print("its Kalman rank:", kalman_rank(bad), "of", bad.N)

# A block that is not yet a staircase. The row operations are recorded so the
# reduction can be replayed and undone exactly.
M = StructureMatrix((2, 2), [[[1, 3], [2, 4]]])
pf = pivot_form(M)
print("\nB1 =", [[str(x) for x in r] for r in M.blocks[0]])
print("pivot form =", [[str(x) for x in r] for r in pf.structure.blocks[0]])
print("ops:", [(op.kind, op.i, op.j, str(op.factor)) for op in pf.ops])
assert pf.undo(pf.structure.blocks[0]) == M.blocks[0]

P = pf.structure
for i in range(1, P.dims[1] + 1):
    w = recover_derivative(P, i)
    terms = " + ".join(f"({a})[d0_{p + 1}, Y]" for a, p in zip(w, pf.pivot_columns) if a)
    print(f"d1_{i} = {terms}  ->  check {[str(x) for x in brackets_to_derivatives(P, w)]}")

print("\nbeta  gamma  s     theta")
for beta, gamma in [(1, 0), (2, 0), (F(3, 2), F(1, 2)), (0, 1), (3, F(1, 3))]:
    p = sobolev_exponent(beta, gamma)
    c = interpolation_theta(p)
    print(f"{str(beta):5} {str(gamma):6} {str(p.s):5} {str(c.theta):5} identities hold: {c.holds}")

for name, S in [("kappa=1", fokker_planck(1)), ("toy", toy_model(1))]:
    law = dilation_law(S)
    print(f"{name}: group weights {law.group_weights}, Q = {law.Q}")
