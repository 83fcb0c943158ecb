"""Dilation probe for the exponent law.

Under u -> u o delta_r the transport ratio picks up r^(3s - beta(1-s) - (2+gamma)s),
which vanishes exactly at s = beta / (1 - gamma + beta). Fitting the log-log
slope over r in {1, 3/2, 2} recovers zero at the right s and a visible slope
when s is deliberately shifted by 1/10.
"""

from fractions import Fraction as F

from kolmoreg.fields import gaussian
from kolmoreg.structure import StructureMatrix
from kolmoreg.verify import scaling_experiment, weighted_grid

M = StructureMatrix((1, 1), [[[1]]])
# r=2 squeezes x1 by 8 and t by 4, so those axes get more points
grid = weighted_grid(M, 8, 8, 64, r_max=2)
radii = [1, F(3, 2), 2]
print("grid points per axis:", grid.counts)

for beta in (1, 2):
    for shift in (0, F(1, 10), F(-1, 10)):
        rep = scaling_experiment(gaussian(3), M, beta, 0, radii, grid, shift=shift)
        ratios = ", ".join(f"{x:.5f}" for x in rep.ratios)
        print(f"beta={beta} s={str(rep.s):6} ratios [{ratios}]  "
              f"slope {rep.fitted_slope:+.4f}  predicted {float(rep.predicted_slope):+.2f}")
