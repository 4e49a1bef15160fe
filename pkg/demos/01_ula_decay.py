"""How fast does ULA forget its starting point?

On the Gaussian target N(0, 1) the joint law of (X_0, X_k) is Gaussian, so the
mutual information is known exactly.  We print it next to the geometric
bound started from the exact value at k = 1, the regularity bound that needs
only Var(X_0), and a Monte Carlo plug-in estimate from 20 000 chains.
"""
import math

from midec import bounds as B
from midec.estimation import joint_gaussian_fit, mi_plugin_gaussian
from midec.gaussian_oracle import ula_gaussian_mi_exact
from midec.samplers import ChainConfig, run_chain_pairs
from midec.targets import GaussianDist

alpha, eta = 1.0, 0.1
std = GaussianDist([0.0], [[1.0]])
ks = [1, 2, 5, 10, 20, 40]

# Sobolev constant of the law of X_1, starting from N(0, 1)
a1 = B.sobolev_evolution_ula(1.0, 1 - alpha * eta, eta)
mi1 = ula_gaussian_mi_exact(alpha, eta, 1)

sample = run_chain_pairs(ChainConfig("ula", eta, ks, 20_000, seed=1, init=std), std)

print(f"{'k':>3} {'exact':>11} {'theorem':>11} {'regularity':>11} {'estimate':>18}")
for k in ks:
    exact = ula_gaussian_mi_exact(alpha, eta, k)
    thm = B.bound_mi_ula(alpha, eta, a1, mi1, k - 1)
    reg = B.bound_mi_regularity_ula(alpha, eta, k, 1.0)
    est, hw = mi_plugin_gaussian(joint_gaussian_fit(sample, k), n_boot=100)
    print(f"{k:>3} {exact:11.3e} {thm:11.3e} {reg:11.3e} {est:10.3e} +-{hw:.1e}")

print()
print("the bound decays like (1 - alpha*eta)^(2k); exact log-slope at large k:")
print(f"  {math.log(ula_gaussian_mi_exact(alpha, eta, 61) / ula_gaussian_mi_exact(alpha, eta, 60)):.5f}"
      f" vs 2 log(0.9) = {2 * math.log(0.9):.5f}")
print("steps to reach MI <= 1e-3 from the k=1 value:", B.iters_ula(1e-3, alpha, eta, a1, mi1, ell=1))
