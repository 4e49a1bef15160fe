"""Phi-divergences, Phi-Fisher information, Phi-Sobolev constants and Phi-MI.

A convex generator ``Phi`` with ``Phi(1) = 0`` induces the divergence
``D_Phi(mu || nu) = E_nu[Phi(mu / nu)]``, the Fisher-type dissipation
``FI_Phi(mu || nu) = E_nu[|d(mu/nu)|^2 Phi''(mu/nu)]`` and the mutual
information ``MI_Phi(X; Y) = D_Phi(rho_XY || rho_X ⊗ rho_Y)``.

Generators are looked up by name::

    >>> gen = get_generator("chi2")
    >>> phi_eval(gen, 2.0)
    (1.0, 2.0, 2.0)
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import CapabilityError, DomainError
from .targets import GaussianDist

__all__ = [
    "PhiGenerator",
    "GENERATORS",
    "get_generator",
    "phi_eval",
    "phi_value",
    "SobolevConstant",
    "phi_divergence_gaussian",
    "phi_divergence_quadrature_1d",
    "phi_fisher_info_quadrature_1d",
    "sobolev_constant_slc",
    "sobolev_pushforward",
    "sobolev_convolution",
    "phi_mutual_info_gaussian",
    "gaussian_kl",
]

_DENSITY_FLOOR = 1e-300
_DIVERGED = 1e12
_MAX_NODES = 256
_NODE_RTOL = 1e-8


@dataclass(frozen=True)
class PhiGenerator:
    """A convex generator ``Phi`` and its first two derivatives.

    ``singular_at_zero`` marks generators whose derivatives blow up at 0;
    ``smooth`` is false only for total variation.
    """

    name: str
    value: Callable
    d1: Callable
    d2: Callable | None
    singular_at_zero: bool
    smooth: bool = True

    def __repr__(self):
        return f"PhiGenerator({self.name!r})"


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)


GENERATORS = {
    g.name: g
    for g in (
        PhiGenerator("kl", _xlogx, lambda x: np.log(x) + 1.0, lambda x: 1.0 / x, True),
        PhiGenerator("chi2", lambda x: (x - 1.0) ** 2, lambda x: 2.0 * (x - 1.0), lambda x: 2.0 + 0.0 * x, False),
        PhiGenerator(
            "hellinger2",
            lambda x: 0.5 * (np.sqrt(x) - 1.0) ** 2,
            lambda x: 0.5 - 0.5 / np.sqrt(x),
            lambda x: 0.25 * x ** -1.5,
            True,
        ),
        PhiGenerator(
            "tv",
            lambda x: 0.5 * np.abs(x - 1.0),
            lambda x: 0.5 * np.sign(x - 1.0),
            None,
            False,
            smooth=False,
        ),
        PhiGenerator("reverse-kl", lambda x: -np.log(x), lambda x: -1.0 / x, lambda x: 1.0 / x**2, True),
        PhiGenerator(
            "reverse-chi2",
            lambda x: 1.0 / x - x,
            lambda x: -1.0 / x**2 - 1.0,
            lambda x: 2.0 / x**3,
            True,
        ),
    )
}

_ALIASES = {
    "ChiSquared": "chi2",
    "KL": "kl",
    "SquaredHellinger": "hellinger2",
    "TV": "tv",
    "ReverseKL": "reverse-kl",
    "ReverseChiSquared": "reverse-chi2",
}


def get_generator(gen) -> PhiGenerator:
    """Resolve a generator from its name (``"kl"``, ``"chi2"``, ...) or pass one through."""
    if isinstance(gen, PhiGenerator):
        return gen
    name = _ALIASES.get(gen, gen)
    try:
        return GENERATORS[name]
    except KeyError:
        raise DomainError(f"unknown generator {gen!r}; known: {sorted(GENERATORS)}") from None


def phi_eval(gen, x, order=2):
    """Return ``(Phi(x), Phi'(x), Phi''(x))`` at a scalar ``x >= 0``.

    With ``order=1`` only the value and first derivative are returned, which
    is the most total variation supports (its subgradient at 1 is taken as 0).
    """
    gen = get_generator(gen)
    x = float(x)
    if x < 0 or math.isnan(x):
        raise DomainError("Phi is defined on x >= 0")
    if x == 0 and gen.singular_at_zero:
        raise DomainError(f"{gen.name} has a singular derivative at 0")
    if order >= 2 and gen.d2 is None:
        raise CapabilityError(f"{gen.name} has no second derivative")
    out = (float(gen.value(x)), float(gen.d1(x)))
    if order >= 2:
        out = out + (float(gen.d2(x)),)
    return out


def phi_value(gen, x):
    """Vectorised ``Phi(x)`` with the usual limits at ``x = 0``."""
    gen = get_generator(gen)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return gen.value(x)


class SobolevConstant(float):
    """A certified lower bound ``> 0`` on an optimal Phi-Sobolev constant.

    ``inf`` is allowed and stands for a point mass, whose reciprocal is 0.
    """

    def __new__(cls, value):
        value = float(value)
        if not value > 0:
            raise DomainError(f"Sobolev constant must be > 0, got {value}")
        return super().__new__(cls, value)

    @property
    def value(self) -> float:
        return float(self)

    def __repr__(self):
        return f"SobolevConstant({float(self)!r})"


# -- Gaussian closed forms ---------------------------------------------------


def _logdet(c):
    sign, ld = np.linalg.slogdet(c)
    if sign <= 0:
        raise DomainError("covariance must be nonsingular")
    return ld


def gaussian_kl(mu: GaussianDist, nu: GaussianDist) -> float:
    """``KL(mu || nu)`` for nonsingular Gaussians in any dimension."""
    d = mu.dim
    prec = np.linalg.inv(nu.covariance)
    dm = nu.mean - mu.mean
    val = 0.5 * (
        np.trace(prec @ mu.covariance) + dm @ prec @ dm - d + _logdet(nu.covariance) - _logdet(mu.covariance)
    )
    return max(float(val), 0.0)


def _log_int_sq_ratio(mu: GaussianDist, nu: GaussianDist) -> float:
    """``log ∫ mu² / nu``; ``inf`` when ``2 Σ_nu - Σ_mu`` is not positive definite."""
    if np.linalg.eigvalsh(2 * nu.covariance - mu.covariance)[0] <= 0:
        return math.inf
    p = np.linalg.inv(mu.covariance)
    q = np.linalg.inv(nu.covariance)
    a, b = mu.mean, nu.mean
    amat = 2 * p - q
    h = 2 * p @ a - q @ b
    return float(
        -_logdet(mu.covariance)
        + 0.5 * _logdet(nu.covariance)
        - 0.5 * _logdet(amat)
        + 0.5 * h @ np.linalg.solve(amat, h)
        - a @ p @ a
        + 0.5 * b @ q @ b
    )


def _gaussian_chi2(mu, nu):
    lv = _log_int_sq_ratio(mu, nu)
    return math.inf if math.isinf(lv) else max(math.expm1(lv), 0.0)


def _gaussian_hellinger2(mu, nu):
    avg = 0.5 * (mu.covariance + nu.covariance)
    dm = mu.mean - nu.mean
    log_bc = (
        0.25 * _logdet(mu.covariance)
        + 0.25 * _logdet(nu.covariance)
        - 0.5 * _logdet(avg)
        - 0.125 * dm @ np.linalg.solve(avg, dm)
    )
    return max(-math.expm1(log_bc), 0.0)


_GAUSSIAN_CLOSED_FORMS = {
    "kl": gaussian_kl,
    "chi2": _gaussian_chi2,
    "hellinger2": _gaussian_hellinger2,
    "reverse-kl": lambda mu, nu: gaussian_kl(nu, mu),
    "reverse-chi2": lambda mu, nu: _gaussian_chi2(nu, mu),
}


def phi_divergence_gaussian(gen, mu: GaussianDist, nu: GaussianDist) -> float:
    """``D_Phi(mu || nu)`` between nonsingular Gaussians.

    Smooth generators use closed forms in any dimension; chi-squared type
    divergences return ``inf`` when the defining integral diverges.  Total
    variation falls back to quadrature and is limited to ``d = 1``.
    """
    gen = get_generator(gen)
    if mu.dim != nu.dim:
        raise DomainError("dimension mismatch")
    closed = _GAUSSIAN_CLOSED_FORMS.get(gen.name)
    if closed is not None:
        return closed(mu, nu)
    if mu.dim != 1:
        raise CapabilityError(f"{gen.name} divergence between Gaussians is only supported for d = 1")
    return phi_divergence_quadrature_1d(gen, mu.pdf, nu.pdf, _gaussian_domain(mu, nu), tol=1e-9)


def _gaussian_domain(*dists, width=10.0):
    lo = min(float(g.mean[0] - width * math.sqrt(g.covariance[0, 0])) for g in dists)
    hi = max(float(g.mean[0] + width * math.sqrt(g.covariance[0, 0])) for g in dists)
    return lo, hi


# -- 1-d quadrature ----------------------------------------------------------


def _check_normalised(f, a, b, norm_tol, label):
    mass = integrate.quad(f, a, b, epsabs=1e-12, limit=200)[0]
    if abs(mass - 1.0) > norm_tol:
        raise DomainError(f"{label} integrates to {mass:.12g} over [{a}, {b}], not 1")


def phi_divergence_quadrature_1d(gen, p, q, domain, tol=1e-9, norm_tol=1e-6) -> float:
    """``∫ q Phi(p/q)`` over ``domain`` by adaptive quadrature.

    ``p`` and ``q`` are density callbacks.  Densities are clipped below at
    1e-300 and regions where ``q`` falls under that floor contribute 0.
    """
    gen = get_generator(gen)
    a, b = map(float, domain)
    _check_normalised(p, a, b, norm_tol, "p")
    _check_normalised(q, a, b, norm_tol, "q")

    def integrand(x):
        qx = q(x)
        if qx < _DENSITY_FLOOR:
            return 0.0
        px = max(p(x), _DENSITY_FLOOR)
        return qx * float(phi_value(gen, px / qx))

    val, _ = integrate.quad(integrand, a, b, epsabs=tol, epsrel=0.0, limit=500)
    if not math.isfinite(val) or val > _DIVERGED:
        return math.inf
    return val


def _log_density(f):
    def logf(x):
        return math.log(max(f(x), _DENSITY_FLOOR))

    return logf


def phi_fisher_info_quadrature_1d(gen, p, q, domain, tol=1e-9, dlogp=None, dlogq=None) -> float:
    """``E_q[(d/dx (p/q))^2 Phi''(p/q)]`` by quadrature in one dimension.

    The derivative of the ratio is formed as ``r * d/dx log r`` with the log
    densities differentiated by central differences, unless the scores
    ``dlogp``/``dlogq`` are supplied.
    Returns ``inf`` when the integral diverges (partial sums above 1e12).
    """
    gen = get_generator(gen)
    if not gen.smooth:
        raise CapabilityError("Phi-Fisher information needs a twice differentiable generator")
    a, b = map(float, domain)
    lp = _log_density(p)
    lq = _log_density(q)

    def dlog(f, x):
        h = 1e-5 * (1.0 + abs(x))
        return (f(x + h) - f(x - h)) / (2 * h)

    def integrand(x):
        qx = q(x)
        if qx < _DENSITY_FLOOR:
            return 0.0
        lr = lp(x) - lq(x)
        if lr > 700:
            return _DIVERGED
        r = math.exp(lr)
        sp = dlog(lp, x) if dlogp is None else dlogp(x)
        sq = dlog(lq, x) if dlogq is None else dlogq(x)
        s = sp - sq
        if s == 0.0:
            return 0.0
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            val = float(qx * r * r * s * s * gen.d2(np.float64(r)))
        return val if math.isfinite(val) else _DIVERGED

    with warnings.catch_warnings():
        # a divergent integrand is reported through the return value
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(integrand, a, b, epsabs=tol, epsrel=0.0, limit=500)
    if not math.isfinite(val) or val > _DIVERGED:
        return math.inf
    return max(val, 0.0)


# -- Sobolev constant algebra -----------------------------------------------


def sobolev_constant_slc(alpha: float) -> SobolevConstant:
    """An ``alpha``-strongly log-concave law satisfies a Phi-SI with constant ``alpha``."""
    if not alpha > 0:
        raise DomainError("alpha must be > 0")
    return SobolevConstant(alpha)


def sobolev_pushforward(c, lip: float) -> SobolevConstant:
    """Constant after pushing forward through a ``lip``-Lipschitz map."""
    if not lip > 0:
        raise DomainError("Lipschitz constant must be > 0")
    return SobolevConstant(float(c) / lip**2)


def sobolev_convolution(c1, c2) -> SobolevConstant:
    """Constant of a convolution: reciprocals add."""
    c1, c2 = SobolevConstant(c1), SobolevConstant(c2)
    return SobolevConstant(1.0 / (1.0 / c1 + 1.0 / c2))


# -- Phi mutual information for Gaussian joints -----------------------------


def _canonical_sq(joint):
    """Squared canonical correlations between the two blocks of a Gaussian joint."""

    def inv_sqrt(c):
        w, u = np.linalg.eigh(c)
        if w[0] <= 0:
            raise DomainError("marginal covariance must be nonsingular")
        return (u / np.sqrt(w)) @ u.T

    k = inv_sqrt(joint.cov0) @ joint.cross @ inv_sqrt(joint.covk)
    return np.linalg.svd(k, compute_uv=False) ** 2


def _kl_mi(joint) -> float:
    s2 = _canonical_sq(joint)
    if np.any(s2 >= 1.0):
        return math.inf
    return max(float(-0.5 * np.sum(np.log1p(-s2))), 0.0)


def phi_mutual_info_gaussian(joint, gen="kl", n_nodes=64) -> float:
    """``MI_Phi`` of a jointly Gaussian pair ``(X_0, X_k)``.

    KL is evaluated in any dimension as ``-½ log det(I - C)`` with ``C`` the
    squared canonical correlations.  Other smooth generators are supported for
    ``d = 1`` as ``E_x[D_Phi(law(Y | X=x) || law(Y))]`` with a Gauss-Hermite
    rule over ``x`` whose node count is doubled until it settles.
    """
    gen = get_generator(gen)
    if not gen.smooth:
        raise CapabilityError("Phi-MI needs a twice differentiable generator")
    if not np.any(joint.cross):
        return 0.0
    if gen.name == "kl":
        return _kl_mi(joint)
    if joint.d != 1:
        raise CapabilityError(f"{gen.name} mutual information is only supported for d = 1")
    v0 = float(joint.cov0[0, 0])
    vk = float(joint.covk[0, 0])
    c = float(joint.cross[0, 0])
    cond_var = vk - c * c / v0
    if cond_var <= 0:
        return math.inf
    marg = GaussianDist(joint.meank, [[vk]])
    # chi-squared types grow like exp(x^2) in the conditioning value, so the
    # outer average is taken in log space
    log_form = {"chi2": lambda m, n: _log_int_sq_ratio(m, n), "reverse-chi2": lambda m, n: _log_int_sq_ratio(n, m)}
    closed = log_form.get(gen.name, _GAUSSIAN_CLOSED_FORMS[gen.name])

    if gen.name in log_form:
        # the log-integrand is quadratic in z; its average under N(0, 1) is
        # finite only when the z^2 coefficient is below 1/2
        lv = [closed(GaussianDist(joint.meank + c / math.sqrt(v0) * z, [[cond_var]]), marg) for z in (-1.0, 0.0, 1.0)]
        if any(math.isinf(v) for v in lv) or 0.5 * (lv[0] + lv[2] - 2 * lv[1]) >= 0.5 - 1e-12:
            return math.inf

    def rule(n):
        nodes, weights = np.polynomial.hermite_e.hermegauss(n)
        weights = weights / weights.sum()
        vals = np.empty(n)
        for i, z in enumerate(nodes):
            cond = GaussianDist(joint.meank + c / math.sqrt(v0) * z, [[cond_var]])
            vals[i] = closed(cond, marg)
        if np.any(np.isinf(vals)):
            return math.inf
        if gen.name in log_form:
            top = np.max(vals)
            log_mean = top + math.log(float(np.sum(weights * np.exp(vals - top))))
            return math.inf if log_mean > 700 else math.expm1(log_mean)
        return float(np.sum(weights * vals))

    prev = rule(n_nodes)
    n = n_nodes
    while n < _MAX_NODES and math.isfinite(prev):
        n *= 2
        cur = rule(n)
        if abs(cur - prev) <= _NODE_RTOL * abs(cur) or abs(cur - prev) < 1e-14:
            return max(cur, 0.0)
        prev = cur
    return max(prev, 0.0) if math.isfinite(prev) else math.inf
