"""Target distributions and potentials.

A target ``nu ∝ exp(-f)`` is described by a :class:`Potential`, which carries
vectorised value and gradient oracles together with the strong-convexity
modulus ``alpha`` and (optionally) the smoothness constant.  Gaussian targets
and initial laws are described by :class:`GaussianDist`.

All oracles act on arrays of shape ``(..., d)`` so a single call can serve
every chain in a batch.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError

__all__ = [
    "GaussianDist",
    "Potential",
    "ValidationReport",
    "gaussian_potential",
    "validate_potential",
    "builtin_potential",
    "BUILTIN_POTENTIALS",
]

_SYM_TOL = 1e-12
_PSD_TOL = 1e-10
_EIG_FLOOR = 1e-12
_MAX_COND = 1e12


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GaussianDist:
    """Multivariate normal law ``N(mean, covariance)``.

    The covariance may be singular (a point mass in some directions); it must
    be symmetric and positive semi-definite.
    """

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.asarray(self.covariance, dtype=float)
        if mean.ndim != 1:
            raise DomainError("mean must be a vector")
        d = mean.shape[0]
        if cov.ndim == 0:
            cov = cov * np.eye(d)
        if cov.shape != (d, d):
            raise DomainError(f"covariance has shape {cov.shape}, expected {(d, d)}")
        if not np.all(np.isfinite(cov)) or not np.all(np.isfinite(mean)):
            raise DomainError("mean and covariance must be finite")
        if np.max(np.abs(cov - cov.T), initial=0.0) > _SYM_TOL:
            raise DomainError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        eig = np.linalg.eigvalsh(cov)
        if eig[0] < -_PSD_TOL * max(eig[-1], 0.0):
            raise DomainError("covariance is not positive semi-definite")
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "covariance", _frozen(cov))

    @classmethod
    def isotropic(cls, mean, variance, dim=None):
        """``N(mean, variance * I)``; a scalar mean is broadcast to ``dim``."""
        mean = np.asarray(mean, dtype=float)
        if mean.ndim == 0:
            mean = np.full(1 if dim is None else dim, float(mean))
        return cls(mean, variance * np.eye(mean.shape[0]))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def eigh(self):
        """Eigenvalues (ascending, clipped at 0) and eigenvectors of the covariance."""
        w, u = np.linalg.eigh(self.covariance)
        return np.clip(w, 0.0, None), u

    def sqrt_cov(self) -> np.ndarray:
        """Symmetric square root of the covariance."""
        w, u = self.eigh()
        return (u * np.sqrt(w)) @ u.T

    def isotropic_variance(self, rtol=1e-12) -> Optional[float]:
        """Return ``c`` if the covariance equals ``c * I``, else ``None``."""
        c = float(np.trace(self.covariance)) / self.dim
        if np.allclose(self.covariance, c * np.eye(self.dim), rtol=0.0, atol=rtol * max(abs(c), 1.0)):
            return c
        return None

    def logpdf(self, x):
        """Log density at ``x`` of shape ``(..., d)``; requires a nonsingular covariance."""
        x = np.asarray(x, dtype=float)
        w, u = self.eigh()
        if w[0] <= _EIG_FLOOR * w[-1]:
            raise DomainError("density undefined for a singular covariance")
        r = (x - self.mean) @ u
        maha = np.sum(r * r / w, axis=-1)
        return -0.5 * (maha + np.sum(np.log(w)) + self.dim * np.log(2 * np.pi))

    def pdf(self, x):
        return np.exp(self.logpdf(x))


@dataclass(frozen=True, eq=False)
class Potential:
    """Target ``nu ∝ exp(-f)`` given by oracles for ``f`` and ``grad f``.

    Parameters
    ----------
    dim : int
        Dimension of the state space.
    value, grad : callable
        Vectorised oracles mapping ``(..., d)`` arrays to ``(...)`` and
        ``(..., d)`` arrays respectively.
    alpha : float
        Strong-convexity modulus of ``f`` (0 for merely convex).
    smoothness : float or None
        Lipschitz constant of ``grad f``; ``None`` when unknown.
    """

    dim: int
    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    alpha: float
    smoothness: Optional[float] = None
    name: str = field(default="potential", compare=False)

    def __post_init__(self):
        if self.alpha < 0:
            raise DomainError("alpha must be nonnegative")
        if self.smoothness is not None and self.alpha > self.smoothness:
            raise DomainError("alpha exceeds the declared smoothness")


def gaussian_potential(g: GaussianDist) -> Potential:
    """Potential ``f(x) = ½ (x-m)ᵀ Σ⁻¹ (x-m)`` of a nonsingular Gaussian."""
    w, u = np.linalg.eigh(g.covariance)
    lmax = w[-1]
    if lmax <= 0 or w[0] <= 0 or lmax / w[0] > _MAX_COND:
        raise DomainError("covariance is singular (condition number > 1e12)")
    w = np.maximum(w, _EIG_FLOOR * lmax)
    prec = _frozen((u / w) @ u.T)
    m = g.mean

    def value(x):
        r = np.asarray(x, dtype=float) - m
        return 0.5 * np.einsum("...i,ij,...j->...", r, prec, r)

    def grad(x):
        return (np.asarray(x, dtype=float) - m) @ prec

    return Potential(g.dim, value, grad, alpha=1.0 / lmax, smoothness=1.0 / w[0], name="gaussian")


@dataclass
class ValidationReport:
    """Outcome of :func:`validate_potential`."""

    max_grad_error: float
    curvature_flags: list = field(default_factory=list)
    grad_tolerance: float = 1e-5

    @property
    def gradient_ok(self) -> bool:
        return self.max_grad_error <= self.grad_tolerance

    @property
    def ok(self) -> bool:
        return self.gradient_ok and not self.curvature_flags


def validate_potential(p: Potential, probes, n_directions=None, seed=0) -> ValidationReport:
    """Check the oracles of ``p`` against finite differences at ``probes``.

    The gradient is compared with central differences along each coordinate
    axis.  Curvature along axes and a few random unit directions is estimated
    by central second differences and flagged when it leaves
    ``[alpha - 1e-3, smoothness + 1e-3]``.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if probes.shape[-1] != p.dim:
        probes = probes.reshape(-1, p.dim)
    d = p.dim
    rng = np.random.default_rng(seed)
    n_directions = d if n_directions is None else n_directions
    extra = rng.standard_normal((n_directions, d))
    extra /= np.linalg.norm(extra, axis=1, keepdims=True)
    directions = np.vstack([np.eye(d), extra])

    max_err = 0.0
    flags = []
    for x in probes:
        scale = 1.0 + np.max(np.abs(x))
        h1 = 1e-5 * scale
        g = np.asarray(p.grad(x), dtype=float)
        fd = np.array([(p.value(x + h1 * e) - p.value(x - h1 * e)) / (2 * h1) for e in np.eye(d)])
        max_err = max(max_err, float(np.max(np.abs(fd - g))))

        h2 = 1e-4 * scale
        f0 = p.value(x)
        for v in directions:
            curv = float((p.value(x + h2 * v) - 2 * f0 + p.value(x - h2 * v)) / h2**2)
            if curv < p.alpha - 1e-3:
                flags.append((x.copy(), v.copy(), curv, "below_alpha"))
            elif p.smoothness is not None and curv > p.smoothness + 1e-3:
                flags.append((x.copy(), v.copy(), curv, "above_smoothness"))
    return ValidationReport(max_err, flags)


def _logcosh(dim=1, alpha=1.0):
    # f = alpha/2 |x|^2 + sum log cosh x_i ; 0 <= (log cosh)'' <= 1
    def value(x):
        x = np.asarray(x, dtype=float)
        a = np.abs(x)
        lc = a + np.log1p(np.exp(-2 * a)) - np.log(2.0)
        return 0.5 * alpha * np.sum(x * x, axis=-1) + np.sum(lc, axis=-1)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return alpha * x + np.tanh(x)

    return Potential(dim, value, grad, alpha=alpha, smoothness=alpha + 1.0, name="logcosh")


def _smooth_abs(dim=1, alpha=1.0):
    # f = alpha/2 |x|^2 + sum sqrt(1 + x_i^2) ; 0 < (sqrt(1+x^2))'' <= 1
    def value(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * alpha * np.sum(x * x, axis=-1) + np.sum(np.sqrt(1 + x * x), axis=-1)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return alpha * x + x / np.sqrt(1 + x * x)

    return Potential(dim, value, grad, alpha=alpha, smoothness=alpha + 1.0, name="smooth_abs")


BUILTIN_POTENTIALS = {
    "logcosh": _logcosh,
    "smooth_abs": _smooth_abs,
}


def builtin_potential(name: str, dim: int = 1, alpha: float = 1.0) -> Potential:
    """Instantiate a registered non-Gaussian strongly log-concave test potential."""
    try:
        factory = BUILTIN_POTENTIALS[name]
    except KeyError:
        raise DomainError(f"unknown builtin potential {name!r}; known: {sorted(BUILTIN_POTENTIALS)}") from None
    if alpha <= 0:
        raise DomainError("builtin potentials require alpha > 0")
    return factory(dim=dim, alpha=alpha)
