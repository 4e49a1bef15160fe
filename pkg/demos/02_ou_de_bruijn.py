"""Langevin dynamics on N(0, 1): the OU process.

The time derivative of the mutual information equals minus the mutual
Fisher information.  We check this by a finite difference of the closed form
against quadrature of the conditional Fisher information, then show the
entropy-power sandwich and the continuous-time bounds.
"""
import math

import numpy as np

from midec import bounds as B
from midec.gaussian_oracle import ou_joint, ou_mi_bounds, ou_mi_exact
from midec.phi import phi_fisher_info_quadrature_1d
from midec.targets import GaussianDist

std = GaussianDist([0.0], [[1.0]])
z, w = np.polynomial.hermite_e.hermegauss(48)
w = w / w.sum()


def npdf(x, m, v):
    return np.exp(-0.5 * (x - m) ** 2 / v) / math.sqrt(2 * math.pi * v)


print(f"{'t':>5} {'dMI/dt':>12} {'-FI':>12}")
for t in (0.25, 0.5, 1.0, 2.0):
    h = 1e-5
    dmi = (ou_mi_exact(1.0, t + h) - ou_mi_exact(1.0, t - h)) / (2 * h)
    j = ou_joint(1.0, std, t)
    a, vk = j.cross[0, 0], j.covk[0, 0]
    tau = vk - a * a
    fi = sum(
        wi * phi_fisher_info_quadrature_1d("kl", lambda x, m=a * zi: npdf(x, m, tau), lambda x: npdf(x, 0, vk), (a * zi - 20, a * zi + 20))
        for zi, wi in zip(z, w)
    )
    print(f"{t:5.2f} {dmi:12.6f} {-fi:12.6f}")

H0 = 0.5 * math.log(2 * math.pi * math.e)
print("\nsandwich for an N(0, 1) start (both sides tight):")
for t in (0.1, 1.0, 3.0):
    lo, up = ou_mi_bounds(1.0, t, 1, 1.0, H0)
    print(f"  t={t:<4} {lo:.6e} <= {ou_mi_exact(1.0, t):.6e} <= {up:.6e}")

print("\nbounds from s = 0.1 for a wide start N(0, 4):")
a_s = B.sobolev_evolution_langevin(1.0, 0.25, 0.1)
mi_s = ou_mi_exact(1.0, 0.1, 1, 4.0)
for t in (0.5, 1.0, 2.0, 4.0):
    print(f"  t={t:<4} exact {ou_mi_exact(1.0, t, 1, 4.0):.3e}  sharp {B.bound_mi_langevin_sharp(1.0, a_s, mi_s, t - 0.1):.3e}"
          f"  theorem {B.bound_mi_langevin(1.0, a_s, mi_s, t - 0.1):.3e}  regularity {B.bound_mi_regularity_ld(1.0, t, 4.0):.3e}")
