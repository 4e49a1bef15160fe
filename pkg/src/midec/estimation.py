"""Empirical joint moments, plug-in mutual information and covariance norms.

The Gaussian plug-in estimator is exact in law for the Gaussian chains used
in the experiments.  For other targets it only measures the Gaussian part of
the dependence and callers should treat it as a heuristic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .gaussian_oracle import JointGaussianState
from .phi import get_generator, phi_value

__all__ = [
    "MomentAccumulator",
    "joint_gaussian_fit",
    "bootstrap_weights",
    "mi_plugin_gaussian",
    "phi_mi_histogram_1d",
    "empirical_cov_opnorm",
]

_RIDGE = 1e-12
_INF_GAP = 1e-10
N_BOOT = 200


@dataclass
class MomentAccumulator:
    """Running means and centred second-moment sums of ``(x0, xk)`` pairs.

    Blocks are combined with the pairwise parallel-variance update, so merging
    partial accumulators gives the same result as one pass up to round-off.
    """

    d: int
    count: int = 0
    mean0: np.ndarray = None
    meank: np.ndarray = None
    s00: np.ndarray = None
    skk: np.ndarray = None
    s0k: np.ndarray = None

    def __post_init__(self):
        z = np.zeros(self.d)
        zz = np.zeros((self.d, self.d))
        for name, v in (("mean0", z), ("meank", z), ("s00", zz), ("skk", zz), ("s0k", zz)):
            if getattr(self, name) is None:
                setattr(self, name, v.copy())

    @classmethod
    def from_pairs(cls, x0, xk):
        x0 = np.asarray(x0, dtype=float).reshape(len(x0), -1)
        xk = np.asarray(xk, dtype=float).reshape(len(xk), -1)
        m0, mk = x0.mean(0), xk.mean(0)
        c0, ck = x0 - m0, xk - mk
        return cls(x0.shape[1], len(x0), m0, mk, c0.T @ c0, ck.T @ ck, c0.T @ ck)

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.d != self.d:
            raise DomainError("dimension mismatch")
        if self.count == 0:
            return other.copy()
        if other.count == 0:
            return self.copy()
        n = self.count + other.count
        w = self.count * other.count / n
        d0 = other.mean0 - self.mean0
        dk = other.meank - self.meank
        return MomentAccumulator(
            self.d,
            n,
            self.mean0 + d0 * other.count / n,
            self.meank + dk * other.count / n,
            self.s00 + other.s00 + w * np.outer(d0, d0),
            self.skk + other.skk + w * np.outer(dk, dk),
            self.s0k + other.s0k + w * np.outer(d0, dk),
        )

    def update(self, x0, xk) -> "MomentAccumulator":
        return self.merge(MomentAccumulator.from_pairs(x0, xk))

    def copy(self):
        return MomentAccumulator(
            self.d, self.count, self.mean0.copy(), self.meank.copy(), self.s00.copy(), self.skk.copy(), self.s0k.copy()
        )

    def covariances(self):
        """Unbiased ``(cov0, covk, cross)``."""
        if self.count < 2:
            raise DomainError("need at least two samples")
        f = 1.0 / (self.count - 1)
        return self.s00 * f, self.skk * f, self.s0k * f


def _ridge(c):
    d = c.shape[0]
    c = 0.5 * (c + c.T)
    return c + _RIDGE * max(float(np.trace(c)) / d, 1.0) * np.eye(d)


def joint_gaussian_fit(samples, index=None, block: int = 65536) -> JointGaussianState:
    """Fit a joint Gaussian to the pairs at ``index``.

    ``samples`` is a :class:`~midec.samplers.TrajectorySample` (with ``index``)
    or a tuple ``(x0, xk)``.  Moments are accumulated over chain-index blocks
    in order, covariance blocks are symmetrised and a ridge of
    ``1e-12 * max(trace/d, 1)`` is added to the diagonal blocks.  The pairs are
    kept on the returned state for bootstrapping.
    """
    x0, xk = samples.pairs(index) if index is not None else samples
    x0 = np.asarray(x0, dtype=float).reshape(len(x0), -1)
    xk = np.asarray(xk, dtype=float).reshape(len(xk), -1)
    n, d = x0.shape
    if n < d + 2:
        raise DomainError(f"need at least d+2 = {d + 2} chains, got {n}")
    acc = MomentAccumulator(d)
    for s in range(0, n, block):
        acc = acc.merge(MomentAccumulator.from_pairs(x0[s : s + block], xk[s : s + block]))
    cov0, covk, cross = acc.covariances()
    return JointGaussianState(acc.mean0, acc.meank, _ridge(cov0), _ridge(covk), cross, pairs=(x0, xk))


def bootstrap_weights(n: int, n_boot: int = N_BOOT, seed: int = 0) -> np.ndarray:
    """Multinomial resampling counts of shape ``(n_boot, n)``.

    Sharing one weight matrix across grid indices makes the replicates of
    different indices resample the same chains.
    """
    rng = np.random.default_rng([seed, 0x5EED])
    w = np.empty((n_boot, n), dtype=np.uint16 if n > 255 * 8 else np.uint8)
    for b in range(n_boot):
        w[b] = np.bincount(rng.integers(0, n, size=n), minlength=n)
    return w


def _mi_from_blocks(cov0, covk, cross) -> float:
    def inv_sqrt(c):
        w, u = np.linalg.eigh(c)
        if w[0] <= 0:
            raise DomainError("marginal covariance is singular")
        return (u / np.sqrt(w)) @ u.T

    k = inv_sqrt(cov0) @ cross @ inv_sqrt(covk)
    gap = 1.0 - np.linalg.svd(k, compute_uv=False) ** 2
    if np.any(gap <= _INF_GAP):
        return math.inf
    return max(float(-0.5 * np.sum(np.log(gap))), 0.0)


def _bootstrap_mi(x0, xk, weights, chunk=20):
    n, d = x0.shape
    c0 = x0 - x0.mean(0)
    ck = xk - xk.mean(0)
    z = np.hstack([c0, ck])
    m = 2 * d
    iu = np.triu_indices(m)
    feats = np.hstack([z, (z[:, :, None] * z[:, None, :])[:, iu[0], iu[1]]])
    out = np.empty(len(weights))
    for s in range(0, len(weights), chunk):
        wb = weights[s : s + chunk].astype(float)
        tot = wb.sum(1, keepdims=True)
        mom = (wb @ feats) / tot
        for j, row in enumerate(mom):
            mu = row[:m]
            second = np.empty((m, m))
            second[iu] = row[m:]
            second.T[iu] = row[m:]
            cov = (second - np.outer(mu, mu)) * tot[j, 0] / (tot[j, 0] - 1)
            out[s + j] = _mi_from_blocks(_ridge(cov[:d, :d]), _ridge(cov[d:, d:]), cov[:d, d:])
    return out


def mi_plugin_gaussian(j: JointGaussianState, weights=None, n_boot: int = N_BOOT, seed: int = 0):
    """Gaussian plug-in KL mutual information and a 95% bootstrap half-width.

    Returns
    -------
    value : float
        ``-½ log det(I - C)`` with ``C`` the squared canonical correlations;
        ``inf`` when some ``1 - c_i^2 <= 1e-10``.
    ci_halfwidth : float
        Half the width of the 2.5%-97.5% percentile interval over bootstrap
        replicates.  Zero when ``j`` carries no samples.
    """
    value = _mi_from_blocks(j.cov0, j.covk, j.cross)
    if j.pairs is None:
        return value, 0.0
    x0, xk = j.pairs
    if weights is None:
        weights = bootstrap_weights(len(x0), n_boot, seed)
    reps = _bootstrap_mi(x0, xk, weights)
    if not np.all(np.isfinite(reps)):
        return value, math.inf
    lo, hi = np.percentile(reps, [2.5, 97.5])
    return value, 0.5 * float(hi - lo)


def phi_mi_histogram_1d(x0, xk, bins: int = 64, gen="kl") -> float:
    """Histogram plug-in ``MI_Phi`` for scalar pairs (diagnostic only).

    Equal-width bins over the data range.  Cells where the product of the
    marginals vanishes contribute 0; the estimate is biased upwards at finite
    sample size and diverges with ``bins`` for degenerate dependence.
    """
    gen = get_generator(gen)
    if not 16 <= bins <= 512:
        raise DomainError("bins must lie in [16, 512]")
    x0 = np.asarray(x0, dtype=float).ravel()
    xk = np.asarray(xk, dtype=float).ravel()
    h, _, _ = np.histogram2d(x0, xk, bins=bins)
    pxy = h / h.sum()
    prod = np.outer(pxy.sum(1), pxy.sum(0))
    mask = prod > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = prod[mask] * phi_value(gen, pxy[mask] / prod[mask])
    total = float(np.sum(vals))
    return math.inf if math.isnan(total) else max(total, 0.0)


def empirical_cov_opnorm(j: JointGaussianState) -> float:
    """Largest singular value of the cross-covariance block."""
    return float(np.linalg.norm(j.cross, 2))
