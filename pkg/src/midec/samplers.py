"""Langevin dynamics, ULA and the proximal sampler, run as batches of chains.

Every chain draws its noise from a counter-based stream keyed by the
experiment seed, the step index and the chain index (see :mod:`midec.rng`),
so the output of :func:`run_chain_pairs` does not depend on how chains are
split into blocks or scheduled across threads.

The single-step functions act on a batch ``x`` of shape ``(n, d)`` (or a
single vector) and take the noise source as an argument, which may be a
:class:`numpy.random.Generator` or a :class:`midec.rng.StepNoise`.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ChainFailure, DomainError, OptimizationError
from .rng import CounterStream, StepNoise
from .targets import GaussianDist, Potential, gaussian_potential

__all__ = [
    "ChainConfig",
    "TrajectorySample",
    "ula_step",
    "langevin_em",
    "ou_exact_step",
    "proximal_forward",
    "rgo_gaussian_exact",
    "rgo_rejection",
    "run_chain_pairs",
    "CHAIN_KINDS",
]

CHAIN_KINDS = ("langevin_em", "ula", "proximal")
_ALIASES = {"langevin": "langevin_em"}

_GD_TOL = 1e-10
_GD_MAX_ITER = 10_000
_INIT_TAG = 0
_STEP_TAG = 1
_DEFAULT_BLOCK = 8192


# -- noise helpers -------------------------------------------------------------


def _normals(rng, n, d):
    if isinstance(rng, StepNoise):
        if rng.n != n:
            raise ValueError("noise block size does not match the batch")
        return rng.standard_normal(d)
    return rng.standard_normal((n, d))


def _uniforms(rng, n):
    if isinstance(rng, StepNoise):
        return rng.random()
    return 1.0 - rng.random(n)


def _batch(x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    return np.atleast_2d(x), single


def _check_finite(arr, state, what):
    if not np.all(np.isfinite(arr)):
        bad = np.flatnonzero(~np.all(np.isfinite(arr), axis=-1))
        raise ChainFailure(f"nonfinite {what} at chain(s) {bad[:5].tolist()}", state=state[bad])


# -- single steps --------------------------------------------------------------


def ula_step(p: Potential, x, eta: float, z):
    """One ULA step ``x - eta grad f(x) + sqrt(2 eta) z``."""
    if eta <= 0:
        raise DomainError("eta must be > 0")
    x = np.asarray(x, dtype=float)
    g = np.asarray(p.grad(x), dtype=float)
    _check_finite(np.atleast_2d(g), np.atleast_2d(x), "gradient")
    return x - eta * g + math.sqrt(2 * eta) * np.asarray(z, dtype=float)


def ou_exact_step(target: GaussianDist, x, t: float, z):
    """Exact Langevin transition over time ``t`` towards a Gaussian target.

    ``X_t = m + e^{-t P}(x - m) + (Σ (I - e^{-2 t P}))^{1/2} z`` with ``P = Σ⁻¹``.
    """
    w, u = np.linalg.eigh(target.covariance)
    if w[0] <= 0:
        raise DomainError("target covariance must be nonsingular")
    decay = np.exp(-t / w)
    sd = np.sqrt(w * -np.expm1(-2 * t / w))
    x = np.asarray(x, dtype=float)
    r = (x - target.mean) @ u
    return target.mean + (r * decay + np.asarray(z) @ u * sd) @ u.T


def langevin_em(p: Potential, x0, t: float, dt: float, rng, exact_gaussian: Optional[GaussianDist] = None):
    """Approximate ``X_t`` of ``dX = -grad f(X) dt + sqrt(2) dW`` from ``x0``.

    Uses ``ceil(t/dt)`` Euler-Maruyama substeps with the last one truncated.
    With ``exact_gaussian`` set to the (Gaussian) target the exact transition
    is used instead and a single normal draw is consumed.

    Returns
    -------
    x : ndarray
        State at time ``t``, same shape as ``x0``.
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    xb, single = _batch(x0)
    if t == 0:
        return np.array(x0, dtype=float)
    n, d = xb.shape
    if exact_gaussian is not None:
        out = ou_exact_step(exact_gaussian, xb, t, _normals(rng, n, d))
        return out[0] if single else out
    if not 0 < dt <= t:
        raise DomainError("need 0 < dt <= t")
    n_sub = math.ceil(t / dt - 1e-12)
    done = 0.0
    for j in range(n_sub):
        h = min(dt, t - done)
        xb = ula_step(p, xb, h, _normals(rng, n, d))
        done += h
    return xb[0] if single else xb


def proximal_forward(x, eta: float, rng):
    """Forward half-step ``y = x + sqrt(eta) z``."""
    if eta <= 0:
        raise DomainError("eta must be > 0")
    xb, single = _batch(x)
    y = xb + math.sqrt(eta) * _normals(rng, *xb.shape)
    return y[0] if single else y


def _rgo_gaussian_params(target: GaussianDist, eta):
    w, u = np.linalg.eigh(target.covariance)
    if w[0] <= 0 or w[-1] / w[0] > 1e12:
        raise DomainError("RGO needs a nonsingular target covariance")
    mw = 1.0 / (1.0 / w + 1.0 / eta)
    return w, u, mw


def rgo_gaussian_exact(target: GaussianDist, y, eta: float, rng):
    """Exact draw from ``x ∝ exp(-f(x) - |x - y|^2 / (2 eta))`` for Gaussian ``exp(-f)``.

    The law is ``N(M (Σ⁻¹ m + y / eta), M)`` with ``M = (Σ⁻¹ + I/eta)⁻¹``.
    """
    if eta <= 0:
        raise DomainError("eta must be > 0")
    yb, single = _batch(y)
    w, u, mw = _rgo_gaussian_params(target, eta)
    # in the eigenbasis everything is diagonal
    mean_rot = mw * ((target.mean @ u) / w + (yb @ u) / eta)
    z = _normals(rng, *yb.shape)
    x = (mean_rot + (z @ u) * np.sqrt(mw)) @ u.T
    return x[0] if single else x


def _minimise_gy(p, y, eta):
    """Gradient descent on ``g_y(x) = f(x) + |x-y|^2/(2 eta)``, per chain."""
    beta = 1.0 / eta - p.smoothness
    big_m = 1.0 / eta + p.smoothness
    step = 2.0 / (big_m + beta)
    x = y.copy()
    active = np.ones(len(y), dtype=bool)
    evals = np.zeros(len(y), dtype=np.int64)
    for _ in range(_GD_MAX_ITER):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            return x, evals
        xa = x[idx]
        g = np.asarray(p.grad(xa), dtype=float) + (xa - y[idx]) / eta
        _check_finite(g, xa, "gradient")
        evals[idx] += 1
        conv = np.linalg.norm(g, axis=1) <= _GD_TOL
        active[idx[conv]] = False
        move = idx[~conv]
        x[move] = xa[~conv] - step * g[~conv]
    if np.any(active):
        raise OptimizationError(f"RGO minimiser did not converge in {_GD_MAX_ITER} iterations")
    return x, evals


def _rgo_rejection_block(p: Potential, y, eta, rng):
    n, d = y.shape
    beta = 1.0 / eta - p.smoothness
    xstar, evals = _minimise_gy(p, y, eta)

    def g(x):
        return np.asarray(p.value(x), dtype=float) + 0.5 * np.sum((x - y) ** 2, axis=1) / eta

    g_star = g(xstar)
    out = np.empty_like(y)
    rounds = np.zeros(n, dtype=np.int64)
    pending = np.ones(n, dtype=bool)
    while np.any(pending):
        # draw for the whole block each round so a chain's proposals do not
        # depend on which other chains are still pending
        z = xstar + _normals(rng, n, d) / math.sqrt(beta)
        u = _uniforms(rng, n)
        log_acc = -g(z) + g_star + 0.5 * beta * np.sum((z - xstar) ** 2, axis=1)
        rounds[pending] += 1
        acc = pending & (np.log(u) <= log_acc)
        out[acc] = z[acc]
        pending &= ~acc
    return out, rounds, evals


def rgo_rejection(p: Potential, y, eta: float, rng):
    """Exact RGO draw by rejection from a Gaussian centred at the minimiser.

    Requires ``p.smoothness = L`` and ``eta < 1/L`` so that ``g_y`` is
    ``(1/eta - L)``-strongly convex.  The proposal is
    ``N(x*, I/(1/eta - L))`` and a candidate ``Z`` is accepted with
    probability ``exp(-g_y(Z) + g_y(x*) + (beta/2)|Z - x*|^2)``.

    Returns
    -------
    x : ndarray
        Accepted draws, same shape as ``y``.
    iterations : ndarray or int
        Number of proposal rounds used per chain.
    """
    if p.smoothness is None:
        raise DomainError("rejection RGO needs a known smoothness constant")
    if not 0 < eta < 1.0 / p.smoothness:
        raise DomainError("rejection RGO needs eta < 1/L")
    yb, single = _batch(y)
    x, rounds, _ = _rgo_rejection_block(p, yb, eta, rng)
    return (x[0], int(rounds[0])) if single else (x, rounds)


# -- chain configuration and runner --------------------------------------------


@dataclass(frozen=True)
class ChainConfig:
    """Settings for a batch of independent chains.

    For ``langevin_em`` a record index ``k`` stands for time ``k * eta`` and
    ``em_substep`` is the Euler-Maruyama step; for the discrete chains it is
    the iteration count.
    """

    chain_kind: str
    eta: float
    record_indices: Sequence[int]
    n_chains: int
    seed: int
    init: GaussianDist
    em_substep: Optional[float] = None
    exact_gaussian: bool = True
    rgo: str = "auto"
    block_size: int = _DEFAULT_BLOCK

    def __post_init__(self):
        kind = _ALIASES.get(self.chain_kind, self.chain_kind)
        if kind not in CHAIN_KINDS:
            raise DomainError(f"unknown chain kind {self.chain_kind!r}")
        object.__setattr__(self, "chain_kind", kind)
        idx = tuple(int(k) for k in self.record_indices)
        if not idx or idx[0] < 0 or any(b <= a for a, b in zip(idx, idx[1:])):
            raise DomainError("record_indices must be nonnegative and strictly increasing")
        object.__setattr__(self, "record_indices", idx)
        if not self.eta > 0:
            raise DomainError("eta must be > 0")
        if self.n_chains < 1:
            raise DomainError("n_chains must be >= 1")
        if self.rgo not in ("auto", "exact", "rejection"):
            raise DomainError("rgo must be auto, exact or rejection")
        if self.em_substep is not None and not self.em_substep > 0:
            raise DomainError("em_substep must be > 0")

    def times(self):
        scale = self.eta if self.chain_kind == "langevin_em" else 1.0
        return tuple(k * scale for k in self.record_indices)


@dataclass
class TrajectorySample:
    """Recorded ``(X_0, X_k)`` pairs.

    ``xk[i]`` holds the states at ``record_indices[i]``; ``x0`` is shared.
    """

    record_indices: tuple
    x0: np.ndarray
    xk: np.ndarray
    oracle_call_count: int
    seed: int
    stream_ids: dict = field(default_factory=dict)

    @property
    def n_chains(self) -> int:
        return self.x0.shape[0]

    def pairs(self, index):
        i = self.record_indices.index(index)
        return self.x0, self.xk[i]


def _threads():
    n = int(os.environ.get("MIDEC_THREADS", "0") or 0)
    return n if n > 0 else (os.cpu_count() or 1)


def _resolve_target(cfg: ChainConfig, target):
    gauss = target if isinstance(target, GaussianDist) else None
    pot = gaussian_potential(gauss) if gauss is not None else target
    if pot.dim != cfg.init.dim:
        raise DomainError("target and init dimensions differ")
    if cfg.chain_kind == "ula" and pot.smoothness is not None and cfg.eta > 1.0 / pot.smoothness * (1 + 1e-12):
        raise DomainError("ULA requires eta <= 1/L")
    rgo = cfg.rgo
    if cfg.chain_kind == "proximal":
        if rgo == "auto":
            rgo = "exact" if gauss is not None else "rejection"
        if rgo == "exact" and gauss is None:
            raise DomainError("exact RGO needs a Gaussian target")
        if rgo == "rejection" and (pot.smoothness is None or cfg.eta >= 1.0 / pot.smoothness):
            raise DomainError("rejection RGO needs a known L with eta < 1/L")
    if cfg.chain_kind == "langevin_em" and not (cfg.exact_gaussian and gauss is not None):
        if cfg.em_substep is None:
            raise DomainError("langevin_em without an exact Gaussian path needs em_substep")
    return gauss, pot, rgo


def _run_block(cfg, gauss, pot, rgo, start, stop):
    d = cfg.init.dim
    n = stop - start
    init_stream = CounterStream(cfg.seed, _INIT_TAG)
    stream = CounterStream(cfg.seed, _STEP_TAG)
    z0 = init_stream.step(0, start, stop).standard_normal(d)
    x0 = cfg.init.mean + z0 @ cfg.init.sqrt_cov()
    x = x0.copy()
    rec = np.empty((len(cfg.record_indices), n, d))
    calls = 0
    k = 0
    exact_ld = cfg.exact_gaussian and gauss is not None
    for i, target_k in enumerate(cfg.record_indices):
        if cfg.chain_kind == "langevin_em" and target_k > k:
            # one stream step per recorded segment; substeps are successive calls
            noise = stream.step(i, start, stop)
            t = (target_k - k) * cfg.eta
            x = langevin_em(pot, x, t, cfg.em_substep or t, noise, gauss if exact_ld else None)
            if not exact_ld:
                calls += n * math.ceil(t / cfg.em_substep - 1e-12)
            k = target_k
        while k < target_k:
            noise = stream.step(k, start, stop)
            if cfg.chain_kind == "ula":
                x = ula_step(pot, x, cfg.eta, noise.standard_normal(d))
                calls += n
            else:
                y = proximal_forward(x, cfg.eta, noise)
                if rgo == "exact":
                    x = rgo_gaussian_exact(gauss, y, cfg.eta, noise)
                    calls += n
                else:
                    x, rounds, evals = _rgo_rejection_block(pot, y, cfg.eta, noise)
                    calls += int(rounds.sum() + evals.sum())
            k += 1
        rec[i] = x
    return x0, rec, calls


def run_chain_pairs(cfg: ChainConfig, target) -> TrajectorySample:
    """Run ``cfg.n_chains`` chains and record ``(X_0, X_k)`` at each index.

    Chains are processed in blocks of ``cfg.block_size`` on a thread pool
    whose size is read from ``MIDEC_THREADS`` (0 or unset means all cores).
    The result is bit-identical for any block size or thread count.
    """
    gauss, pot, rgo = _resolve_target(cfg, target)
    bounds = [(s, min(s + cfg.block_size, cfg.n_chains)) for s in range(0, cfg.n_chains, cfg.block_size)]
    workers = min(_threads(), len(bounds))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _run_block(cfg, gauss, pot, rgo, *b), bounds))
    else:
        parts = [_run_block(cfg, gauss, pot, rgo, *b) for b in bounds]
    x0 = np.concatenate([p[0] for p in parts])
    xk = np.concatenate([p[1] for p in parts], axis=1)
    return TrajectorySample(
        record_indices=cfg.record_indices,
        x0=x0,
        xk=xk,
        oracle_call_count=sum(p[2] for p in parts),
        seed=cfg.seed,
        stream_ids={"init_tag": _INIT_TAG, "step_tag": _STEP_TAG, "chains": (0, cfg.n_chains)},
    )
