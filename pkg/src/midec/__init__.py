"""Mutual information decay along Langevin dynamics, ULA and the proximal sampler.

Submodules
----------
targets          Gaussian laws and potentials
phi              Phi-divergences, Fisher information, Sobolev constants, Phi-MI
gaussian_oracle  exact joint laws and MI for Gaussian targets
samplers         the three chains with counter-based seeded noise
bounds           decay bounds, contraction coefficients, constant evolution
estimation       plug-in MI and covariance estimates from chain samples
harness          config-driven experiments and verification
"""
from .errors import CapabilityError, ChainFailure, ConfigError, DomainError, MidecError, OptimizationError
from .targets import GaussianDist, Potential, builtin_potential, gaussian_potential, validate_potential
from .phi import (
    SobolevConstant,
    get_generator,
    phi_divergence_gaussian,
    phi_eval,
    phi_mutual_info_gaussian,
)
from .gaussian_oracle import (
    JointGaussianState,
    ou_joint,
    ou_mi_exact,
    proximal_gaussian_joint,
    proximal_gaussian_mi_exact,
    ula_gaussian_joint,
    ula_gaussian_mi_exact,
)
from .samplers import ChainConfig, TrajectorySample, run_chain_pairs
from .bounds import BoundReport
from .estimation import joint_gaussian_fit, mi_plugin_gaussian
from .harness import run_experiment, verify_dominance

__version__ = "0.1.0"
