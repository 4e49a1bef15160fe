"""Beyond KL: Phi-mutual information for other generators.

For a bivariate normal with correlation rho we compare the generators.  The
chi-squared MI is rho^2 / (1 - rho^2), and the reverse chi-squared MI is only
finite for |rho| < 1/2.
"""
import math

from midec.gaussian_oracle import JointGaussianState
from midec.phi import GENERATORS, phi_mutual_info_gaussian

kinds = [k for k, g in GENERATORS.items() if g.smooth]
print("rho   " + " ".join(f"{k:>12}" for k in kinds))
for rho in (0.1, 0.3, 0.49, 0.6, 0.9):
    j = JointGaussianState([0.0], [0.0], [[1.0]], [[1.0]], [[rho]])
    vals = [phi_mutual_info_gaussian(j, k) for k in kinds]
    print(f"{rho:<5} " + " ".join(f"{v:12.5g}" for v in vals))

rho = 0.6
print(f"\nchi2 check at rho={rho}: {rho**2 / (1 - rho**2):.6f}")
print(f"KL check at rho={rho}:   {-0.5 * math.log(1 - rho**2):.6f}")
