"""Exact joint laws of ``(X_0, X_k)`` along Gaussian chains, and their MI.

For the target ``N(0, I/alpha)`` each of Langevin dynamics (the OU process),
ULA and the proximal sampler acts linearly on the state::

    X_k = a X_0 + sqrt(q) Z,      Z ~ N(0, I) independent of X_0

with a scalar gain ``a`` and noise variance ``q`` given by :func:`chain_gain`.
The joint law is then Gaussian with ``cross = a Cov(X_0)``.

Infinite MI (``k = 0`` or ``t = 0``) is returned as ``math.inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .targets import GaussianDist

__all__ = [
    "JointGaussianState",
    "chain_gain",
    "linear_gaussian_joint",
    "ou_joint",
    "ou_mi_exact",
    "ou_mi_bounds",
    "ou_pointwise_kl",
    "heat_flow_mi_bounds",
    "ula_gaussian_joint",
    "ula_gaussian_mi_exact",
    "proximal_gaussian_joint",
    "proximal_gaussian_mi_exact",
    "gaussian_entropy",
    "entropy_power",
]

_PSD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class JointGaussianState:
    """Joint Gaussian law of ``(X_0, X_k)``.

    ``pairs`` optionally carries the ``(x0, xk)`` samples the state was fitted
    from, so that resampling-based error bars can be formed later.
    """

    mean0: np.ndarray
    meank: np.ndarray
    cov0: np.ndarray
    covk: np.ndarray
    cross: np.ndarray
    pairs: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        mean0 = np.atleast_1d(np.asarray(self.mean0, dtype=float))
        d = mean0.shape[0]
        vals = {"mean0": mean0, "meank": np.atleast_1d(np.asarray(self.meank, dtype=float))}
        for name in ("cov0", "covk", "cross"):
            m = np.asarray(self.__getattribute__(name), dtype=float)
            if m.ndim == 0:
                m = m * np.eye(d)
            vals[name] = m
        if vals["meank"].shape != (d,) or any(vals[n].shape != (d, d) for n in ("cov0", "covk", "cross")):
            raise DomainError("inconsistent block shapes")
        big = np.block([[vals["cov0"], vals["cross"]], [vals["cross"].T, vals["covk"]]])
        eig = np.linalg.eigvalsh(0.5 * (big + big.T))
        if eig[0] < -_PSD_TOL * max(eig[-1], 1e-300):
            raise DomainError(f"joint covariance is not PSD (min eigenvalue {eig[0]:.3g})")
        for name, v in vals.items():
            v = np.array(v)
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def d(self) -> int:
        return self.mean0.shape[0]

    def joint_covariance(self) -> np.ndarray:
        return np.block([[self.cov0, self.cross], [self.cross.T, self.covk]])

    def marginal0(self) -> GaussianDist:
        return GaussianDist(self.mean0, self.cov0)

    def marginalk(self) -> GaussianDist:
        return GaussianDist(self.meank, self.covk)


def chain_gain(chain: str, alpha: float, eta: float, k: float = 1):
    """Gain ``a`` and noise variance ``q`` of ``k`` steps on ``N(0, 1/alpha)``.

    For ``chain="langevin"`` the product ``eta * k`` is the elapsed time.
    """
    if alpha <= 0:
        raise DomainError("alpha must be > 0")
    if k < 0 or eta < 0:
        raise DomainError("steps and step size must be nonnegative")
    if chain == "langevin":
        t = eta * k
        return math.exp(-alpha * t), -math.expm1(-2 * alpha * t) / alpha
    if chain == "ula":
        if not 0 < eta < 2 / alpha:
            raise DomainError("ULA on a Gaussian needs 0 < eta < 2/alpha")
        g = 1.0 - eta * alpha
        g2k = g ** (2 * k)
        return g**k, 2 * (1 - g2k) / (alpha * (2 - eta * alpha))
    if chain == "proximal":
        log_c = math.log1p(alpha * eta)
        return math.exp(-k * log_c), -math.expm1(-2 * k * log_c) / alpha
    raise DomainError(f"unknown chain {chain!r}")


def linear_gaussian_joint(init: GaussianDist, gain, noise_cov, offset=None) -> JointGaussianState:
    """Joint law of ``(X_0, A X_0 + b + N(0, Q))`` for ``X_0 ~ init``."""
    d = init.dim
    a = np.asarray(gain, dtype=float)
    a = a * np.eye(d) if a.ndim == 0 else a
    q = np.asarray(noise_cov, dtype=float)
    q = q * np.eye(d) if q.ndim == 0 else q
    b = np.zeros(d) if offset is None else np.asarray(offset, dtype=float)
    c0 = init.covariance
    covk = a @ c0 @ a.T + q
    return JointGaussianState(init.mean, a @ init.mean + b, c0, 0.5 * (covk + covk.T), c0 @ a.T)


def ou_joint(alpha: float, init: GaussianDist, t: float) -> JointGaussianState:
    """Joint law of ``(X_0, X_t)`` along the OU process towards ``N(0, I/alpha)``."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    a, q = chain_gain("langevin", alpha, t, 1)
    return linear_gaussian_joint(init, a, q)


def ula_gaussian_joint(alpha: float, eta: float, k: int, init: GaussianDist) -> JointGaussianState:
    """Joint law of ``(X_0, X_k)`` for ULA on ``N(0, I/alpha)``."""
    a, q = chain_gain("ula", alpha, eta, k)
    return linear_gaussian_joint(init, a, q)


def proximal_gaussian_joint(alpha: float, eta: float, k: int, init: GaussianDist) -> JointGaussianState:
    """Joint law of ``(X_0, X_k)`` for the proximal sampler on ``N(0, I/alpha)``."""
    if eta <= 0:
        raise DomainError("eta must be > 0")
    a, q = chain_gain("proximal", alpha, eta, k)
    return linear_gaussian_joint(init, a, q)


def _init_var(init):
    if init is None:
        return 1.0
    if isinstance(init, GaussianDist):
        c = init.isotropic_variance()
        if c is None:
            raise DomainError("closed-form MI needs an isotropic initialisation")
        return c
    return float(init)


def ou_mi_exact(alpha: float, t: float, d: int = 1, init=None) -> float:
    """KL mutual information between ``X_0`` and ``X_t`` along the OU process.

    ``init`` is an isotropic Gaussian (or its variance); the default ``N(0, I)``
    gives ``(d/2) log(1 + alpha / (e^{2 alpha t} - 1))``.
    """
    if alpha <= 0 or t < 0:
        raise DomainError("need alpha > 0 and t >= 0")
    c0 = _init_var(init)
    if c0 == 0:
        return 0.0
    if t == 0:
        return math.inf
    return 0.5 * d * math.log1p(alpha * c0 / math.expm1(2 * alpha * t))


def ou_mi_bounds(alpha: float, t: float, d: int, J: float, H0: float):
    """``(lower, upper)`` on the OU mutual information.

    The upper bound needs ``Cov(X_0) <= J I``; the lower bound uses the
    entropy ``H0`` of ``X_0`` via the entropy power inequality.
    """
    if alpha <= 0 or t <= 0:
        raise DomainError("need alpha > 0 and t > 0")
    den = math.expm1(2 * alpha * t)
    upper = 0.5 * d * math.log1p(alpha * J / den)
    lower = 0.5 * d * math.log1p(alpha * math.exp(2 * H0 / d) / (2 * math.pi * math.e * den))
    return lower, upper


def ou_pointwise_kl(alpha: float, x, t: float) -> float:
    """``KL(delta_x P_t || N(0, I/alpha))`` for the OU semigroup ``P_t``."""
    if alpha <= 0 or t <= 0:
        raise DomainError("need alpha > 0 and t > 0")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.shape[0]
    a, q = chain_gain("langevin", alpha, t, 1)
    r = alpha * q
    return 0.5 * (d * r + alpha * a * a * float(x @ x) - d - d * math.log(r))


def heat_flow_mi_bounds(t: float, cov0_eigs, H0: float, d: int):
    """``(lower, upper)`` on the MI between ``X_0`` and ``X_0 + sqrt(2t) Z``."""
    if t <= 0:
        raise DomainError("t must be > 0")
    lam = np.clip(np.asarray(cov0_eigs, dtype=float), 0.0, None)
    upper = 0.5 * float(np.sum(np.log1p(lam / (2 * t))))
    lower = 0.5 * d * math.log1p(math.exp(2 * H0 / d) / (4 * math.pi * math.e * t))
    return lower, upper


def ula_gaussian_mi_exact(alpha: float, eta: float, k: int, d: int = 1, init=None) -> float:
    """KL mutual information between ``X_0`` and ``X_k`` for ULA on ``N(0, I/alpha)``."""
    if not 0 < eta < 2 / alpha:
        raise DomainError("need 0 < eta < 2/alpha")
    c0 = _init_var(init)
    if k == 0:
        return math.inf if c0 > 0 else 0.0
    a, q = chain_gain("ula", alpha, eta, k)
    return 0.5 * d * math.log1p(a * a * c0 / q)


def proximal_gaussian_mi_exact(alpha: float, eta: float, k: int, d: int = 1, init=None) -> float:
    """KL mutual information between ``X_0`` and ``X_k`` for the proximal sampler."""
    if alpha <= 0 or eta <= 0:
        raise DomainError("need alpha > 0 and eta > 0")
    c0 = _init_var(init)
    if k == 0:
        return math.inf if c0 > 0 else 0.0
    a, q = chain_gain("proximal", alpha, eta, k)
    return 0.5 * d * math.log1p(a * a * c0 / q)


def gaussian_entropy(cov) -> float:
    """Differential entropy of ``N(m, cov)``; ``-inf`` for a singular covariance."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    d = cov.shape[0]
    sign, ld = np.linalg.slogdet(cov)
    if sign <= 0 or not np.isfinite(ld):
        return -math.inf
    return 0.5 * d * math.log(2 * math.pi * math.e) + 0.5 * ld


def entropy_power(H: float, d: int) -> float:
    """``exp(2H/d) / (2 pi e)``."""
    return math.exp(2 * H / d) / (2 * math.pi * math.e)
