"""Decay bounds on Phi-mutual information, contraction coefficients and
Phi-Sobolev constant evolution along Langevin dynamics, ULA and the
proximal sampler.

All functions are pure calculators.  Bounds take the reference MI (at time
``s`` or iteration ``ell``) as an input; the caller decides whether that is an
exact value or itself a bound.  Sobolev constants may be ``inf`` (a point
mass), in which case the reciprocal forms below are used throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError
from .phi import SobolevConstant

__all__ = [
    "BoundReport",
    "bound_mi_langevin",
    "bound_mi_langevin_sharp",
    "bound_mi_ula",
    "bound_mi_proximal",
    "iters_ula",
    "iters_proximal",
    "sobolev_evolution_langevin",
    "sobolev_evolution_ula",
    "sobolev_evolution_proximal",
    "sobolev_evolution_backward_heat",
    "contraction_langevin",
    "contraction_ula",
    "contraction_proximal",
    "contraction_forward_heat",
    "contraction_backward_heat",
    "mi_bound_via_coefficients",
    "bound_phi_divergence_langevin",
    "bound_mi_regularity_ld",
    "bound_mi_regularity_ula",
    "bound_mi_proximal_first_step",
    "bound_mi_regularity_proximal",
    "bound_cov_from_mi",
    "bound_cov_decay_poincare",
    "bound_kl_regularity",
    "mi_from_pointwise_mixing",
]


def _nonneg(**kw):
    for k, v in kw.items():
        if v < 0 or math.isnan(v):
            raise DomainError(f"{k} must be nonnegative, got {v}")


def _pos(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise DomainError(f"{k} must be > 0, got {v}")


def _inv(c):
    return 0.0 if math.isinf(c) else 1.0 / c


def _ratio_factor(alpha, alpha_ref):
    # max{1, alpha / alpha_ref}
    return max(1.0, alpha * _inv(alpha_ref))


def _scale(mi, factor):
    # keeps inf * 0 from becoming nan
    if factor == 0:
        return 0.0
    return mi * factor


# -- Langevin dynamics -----------------------------------------------------------


def bound_mi_langevin(alpha: float, alpha_s: float, mi_s: float, dt: float) -> float:
    """``e^{-2 alpha dt} max{1, alpha/alpha_s} mi_s``."""
    _nonneg(dt=dt, mi_s=mi_s)
    _pos(alpha=alpha, alpha_s=alpha_s)
    return _scale(mi_s, math.exp(-2 * alpha * dt) * _ratio_factor(alpha, alpha_s))


def contraction_langevin(alpha: float, alpha_rho: float, t: float) -> float:
    """Contraction coefficient of the Langevin kernel over time ``t``.

    ``alpha e^{-2 alpha t} / (alpha_rho (1 - e^{-2 alpha t}) + alpha e^{-2 alpha t})``
    """
    _nonneg(t=t)
    _pos(alpha=alpha, alpha_rho=alpha_rho)
    if t == 0:
        return 1.0
    if math.isinf(alpha_rho):
        return 0.0
    e = math.exp(-2 * alpha * t)
    return alpha * e / (alpha_rho * -math.expm1(-2 * alpha * t) + alpha * e)


def bound_mi_langevin_sharp(alpha: float, alpha_s: float, mi_s: float, dt: float) -> float:
    """``mi_s`` times the Langevin contraction coefficient; never above :func:`bound_mi_langevin`."""
    _nonneg(mi_s=mi_s)
    return _scale(mi_s, contraction_langevin(alpha, alpha_s, dt))


def sobolev_evolution_langevin(alpha: float, alpha_s: float, dt: float) -> SobolevConstant:
    """``1/out = e^{-2 alpha dt}/alpha_s + (1 - e^{-2 alpha dt})/alpha``."""
    _nonneg(dt=dt)
    _pos(alpha=alpha, alpha_s=alpha_s)
    e = math.exp(-2 * alpha * dt)
    inv = e * _inv(alpha_s) + -math.expm1(-2 * alpha * dt) / alpha
    return SobolevConstant(math.inf if inv == 0 else 1.0 / inv)


def bound_phi_divergence_langevin(alpha_phisi: float, t: float, d0: float) -> float:
    """``e^{-2 alpha t} d0`` for the divergence to the target."""
    _nonneg(t=t, d0=d0)
    _pos(alpha_phisi=alpha_phisi)
    return _scale(d0, math.exp(-2 * alpha_phisi * t))


# -- ULA -------------------------------------------------------------------------


def bound_mi_ula(alpha: float, eta: float, alpha_l: float, mi_l: float, steps: int) -> float:
    """``(1 - alpha eta)^{2 steps} max{1, alpha/alpha_l} mi_l``, computed in log space."""
    _nonneg(steps=steps, mi_l=mi_l)
    _pos(alpha=alpha, eta=eta, alpha_l=alpha_l)
    if alpha * eta >= 1:
        raise DomainError("need alpha * eta < 1")
    log_f = 2 * steps * math.log1p(-alpha * eta) + math.log(_ratio_factor(alpha, alpha_l))
    return _scale(mi_l, math.exp(log_f))


def sobolev_evolution_ula(alpha_rho: float, gamma: float, eta: float) -> SobolevConstant:
    """One ULA step: ``out = alpha_rho / (gamma^2 + 2 eta alpha_rho)``."""
    _pos(alpha_rho=alpha_rho, gamma=gamma)
    _nonneg(eta=eta)
    inv = gamma * gamma * _inv(alpha_rho) + 2 * eta
    return SobolevConstant(math.inf if inv == 0 else 1.0 / inv)


def contraction_ula(gamma: float, eta: float, alpha_rho: float) -> float:
    """``gamma^2 / (gamma^2 + 2 eta alpha_rho)``."""
    _pos(gamma=gamma, alpha_rho=alpha_rho)
    _nonneg(eta=eta)
    if math.isinf(alpha_rho):
        return 0.0 if eta > 0 else 1.0
    g2 = gamma * gamma
    return g2 / (g2 + 2 * eta * alpha_rho)


def iters_ula(epsilon: float, alpha: float, eta: float, alpha_l: float, mi_l: float, ell: int = 0) -> int:
    """Smallest ``k >= ell + log(max{1, alpha/alpha_l} mi_l / epsilon) / (2 alpha eta)``."""
    _pos(epsilon=epsilon, alpha=alpha, eta=eta, alpha_l=alpha_l)
    _nonneg(mi_l=mi_l)
    r = _ratio_factor(alpha, alpha_l) * mi_l / epsilon
    if r <= 1:
        return int(ell)
    return int(ell + math.ceil(math.log(r) / (2 * alpha * eta)))


# -- proximal sampler ------------------------------------------------------------


def bound_mi_proximal(alpha: float, eta: float, alpha_l: float, mi_l: float, steps: int) -> float:
    """``mi_l / (1 + eta min{alpha, alpha_l})^{2 steps}``."""
    _nonneg(steps=steps, mi_l=mi_l)
    _pos(alpha=alpha, eta=eta, alpha_l=alpha_l)
    return _scale(mi_l, math.exp(-2 * steps * math.log1p(eta * min(alpha, alpha_l))))


def sobolev_evolution_proximal(alpha: float, alpha_rho: float, eta: float) -> SobolevConstant:
    """One proximal step: ``1/out = (1 + alpha_rho eta)/(alpha_rho (1+alpha eta)^2) + eta/(1+alpha eta)``."""
    _pos(alpha=alpha, alpha_rho=alpha_rho)
    _nonneg(eta=eta)
    c = 1.0 + alpha * eta
    inv = (_inv(alpha_rho) + eta) / (c * c) + eta / c
    return SobolevConstant(math.inf if inv == 0 else 1.0 / inv)


def contraction_proximal(alpha: float, eta: float, alpha_rho: float) -> float:
    """``1 / (1 + 2 eta alpha_rho + eta^2 alpha alpha_rho)``."""
    _pos(alpha=alpha, alpha_rho=alpha_rho)
    _nonneg(eta=eta)
    if math.isinf(alpha_rho):
        return 0.0 if eta > 0 else 1.0
    return 1.0 / (1.0 + 2 * eta * alpha_rho + eta * eta * alpha * alpha_rho)


def contraction_forward_heat(eta: float, alpha_rho: float) -> float:
    """``1 / (1 + eta alpha_rho)``."""
    _nonneg(eta=eta)
    _pos(alpha_rho=alpha_rho)
    if math.isinf(alpha_rho):
        return 0.0 if eta > 0 else 1.0
    return 1.0 / (1.0 + eta * alpha_rho)


def contraction_backward_heat(alpha: float, T: float, t: float, alpha_rho: float) -> float:
    """``(1 + alpha T - alpha t) / ((1 + alpha T)(1 + alpha_rho t) - alpha t)`` for ``0 <= t <= T``."""
    _nonneg(t=t, alpha=alpha)
    _pos(alpha_rho=alpha_rho)
    if t > T:
        raise DomainError("need t <= T")
    if t == 0:
        return 1.0
    if math.isinf(alpha_rho):
        return 0.0
    num = 1.0 + alpha * (T - t)
    return num / ((1.0 + alpha * T) * (1.0 + alpha_rho * t) - alpha * t)


def sobolev_evolution_backward_heat(alpha: float, T: float, t: float, alpha0: float) -> SobolevConstant:
    """``1/out = (1/alpha0)(1 - alpha t/(1+alpha T))^2 + t (1 + alpha (T-t))/(1+alpha T)``."""
    _nonneg(t=t, alpha=alpha)
    _pos(alpha0=alpha0)
    if t > T:
        raise DomainError("need t <= T")
    c = 1.0 + alpha * T
    inv = _inv(alpha0) * (1.0 - alpha * t / c) ** 2 + t * (1.0 + alpha * (T - t)) / c
    return SobolevConstant(math.inf if inv == 0 else 1.0 / inv)


def iters_proximal(epsilon: float, alpha: float, eta: float, alpha_l: float, mi_l: float, ell: int = 0) -> int:
    """Smallest ``k >= ell + (1/2 + 1/(2 eta min{alpha, alpha_l})) log(mi_l / epsilon)``."""
    _pos(epsilon=epsilon, alpha=alpha, eta=eta, alpha_l=alpha_l)
    _nonneg(mi_l=mi_l)
    r = mi_l / epsilon
    if r <= 1:
        return int(ell)
    return int(ell + math.ceil((0.5 + 1.0 / (2 * eta * min(alpha, alpha_l))) * math.log(r)))


# -- generic composition -----------------------------------------------------------


def mi_bound_via_coefficients(coeffs: Sequence[float], mi_l: float) -> float:
    """``mi_l * prod(coeffs)``, accumulated in log space."""
    _nonneg(mi_l=mi_l)
    c = np.asarray(list(coeffs), dtype=float)
    if np.any(~(c > 0)) or np.any(c > 1):
        raise DomainError("contraction coefficients must lie in (0, 1]")
    return _scale(mi_l, math.exp(float(np.sum(np.log(c)))))


# -- regularity bounds --------------------------------------------------------------


def bound_mi_regularity_ld(alpha: float, t: float, var0: float) -> float:
    """MI after time ``t`` of Langevin dynamics from any start with ``E|X_0 - E X_0|^2 = var0``.

    ``alpha var0 / (e^{2 alpha t} - 1)``, or ``var0 / (2t)`` when ``alpha = 0``.
    """
    _pos(t=t)
    _nonneg(alpha=alpha, var0=var0)
    if alpha == 0:
        return var0 / (2 * t)
    return alpha * var0 / math.expm1(2 * alpha * t)


def bound_mi_regularity_ula(alpha: float, eta: float, k: int, var0: float) -> float:
    """``alpha var0 / ((1 - eta alpha)^{-2k} - 1)`` for ``k >= 1``."""
    _pos(alpha=alpha, eta=eta)
    _nonneg(var0=var0)
    if alpha * eta >= 1:
        raise DomainError("need alpha * eta < 1")
    if k < 1:
        raise DomainError("need k >= 1")
    return alpha * var0 / math.expm1(-2 * k * math.log1p(-alpha * eta))


def bound_mi_proximal_first_step(eta: float, var0: float) -> float:
    """``var0 / (2 eta)``: MI after one proximal step."""
    _pos(eta=eta)
    _nonneg(var0=var0)
    return var0 / (2 * eta)


def bound_mi_regularity_proximal(alpha: float, eta: float, k: int, var0: float, alpha1: float) -> float:
    """First-step regularity bound followed by ``k - 1`` proximal contractions."""
    if k < 1:
        raise DomainError("need k >= 1")
    return bound_mi_proximal(alpha, eta, alpha1, bound_mi_proximal_first_step(eta, var0), k - 1)


# -- covariance and KL ------------------------------------------------------------------


def bound_cov_from_mi(mi: float, var_opnorm: float, xi: float) -> float:
    """``xi sqrt(2 var_opnorm mi)``: operator-norm bound on ``Cov(X, Y)``."""
    _nonneg(mi=mi, var_opnorm=var_opnorm, xi=xi)
    return xi * math.sqrt(2 * var_opnorm * mi)


def bound_cov_decay_poincare(alpha: float, t: float, var_f: float) -> float:
    """``e^{-alpha t} var_f``."""
    _nonneg(alpha=alpha, t=t, var_f=var_f)
    return math.exp(-alpha * t) * var_f


def bound_kl_regularity(alpha: float, t: float, w2sq: float) -> float:
    """``alpha w2sq / (2 (e^{2 alpha t} - 1))``; ``w2sq / (4t)`` at ``alpha = 0``."""
    _pos(t=t)
    _nonneg(alpha=alpha, w2sq=w2sq)
    if alpha == 0:
        return w2sq / (4 * t)
    return alpha * w2sq / (2 * math.expm1(2 * alpha * t))


def mi_from_pointwise_mixing(epsilon: float) -> float:
    """If ``KL(delta_x P^k || nu) <= epsilon`` for all ``x`` then ``MI <= epsilon``."""
    _nonneg(epsilon=epsilon)
    return float(epsilon)


# -- report -----------------------------------------------------------------------------


@dataclass
class BoundReport:
    """Per-index columns of an experiment.  Missing entries are ``None``."""

    index: list
    time: list
    exact_mi: list = field(default_factory=list)
    empirical_mi: list = field(default_factory=list)
    ci_halfwidth: list = field(default_factory=list)
    thm_bound: list = field(default_factory=list)
    thm_bound_sharp: list = field(default_factory=list)
    regularity_bound: list = field(default_factory=list)
    sobolev_lower: list = field(default_factory=list)
    contraction_coeff: list = field(default_factory=list)
    cov_opnorm: list = field(default_factory=list)
    cov_bound: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    oracle_call_count: int = 0
    flags: dict = field(default_factory=dict)

    COLUMNS = (
        "index",
        "time",
        "exact_mi",
        "empirical_mi",
        "ci_halfwidth",
        "thm_bound",
        "thm_bound_sharp",
        "regularity_bound",
        "sobolev_lower",
        "contraction_coeff",
        "cov_opnorm",
        "cov_bound",
    )

    def __post_init__(self):
        n = len(self.index)
        for name in self.COLUMNS[2:]:
            col = getattr(self, name)
            if not col:
                setattr(self, name, [None] * n)
            elif len(col) != n:
                raise ValueError(f"column {name} has length {len(col)}, expected {n}")

    def rows(self):
        for i in range(len(self.index)):
            yield tuple(getattr(self, c)[i] for c in self.COLUMNS)

    def value(self, column: str, i: int) -> Optional[float]:
        return getattr(self, column)[i]
