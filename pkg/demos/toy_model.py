"""Exploratory scan on the two-group model.

With B1 = B2 = 1 the operator is x0 d/dx1 + x1 d/dx2 - d/dt - Delta_0 and the
dilation weights are (1, 3, 5). Scanning the gain s over (0, 1) and asking
which s makes |D_g^s u| / (|Delta_0 u|^(1-s) |Lu|^s) scale invariant gives
about 2/3 in x1 and about 2/5 in x2. The x2 value is a conjecture probe, not
a proven estimate.
"""

from fractions import Fraction as F

from kolmoreg.fields import gaussian
from kolmoreg.spectral import GridSpec
from kolmoreg.structure import dilation_law, toy_model
from kolmoreg.verify import toy_scaling_experiment

M = toy_model(1)
print("weights", dilation_law(M).group_weights, "Q =", dilation_law(M).Q)
grid = GridSpec.for_structure(M, 8, 8, 48)
radii = [1, F(11, 10), F(6, 5)]

for group, guess in [(1, F(2, 3)), (2, F(2, 5))]:
    rep = toy_scaling_experiment(gaussian(4), M, radii, grid, group=group)
    print(f"\ngroup {group} [{rep.label}]: balanced s = {rep.balanced_exponent} "
          f"= {float(rep.balanced_exponent):.4f} (balance guess {guess})")
    for s, slope in zip(rep.candidates, rep.slopes):
        if (20 * s).denominator == 1 or s == rep.balanced_exponent:
            print(f"  s={float(s):.4f} slope {slope:+.4f}")
