"""Counter-based random streams keyed by (seed, tag, step, chain).

Every chain draws its noise at step ``k`` from a Philox block whose key is a
hash of ``(seed, tag, k, call)`` and whose counter starts at a fixed offset
given by the chain index.  A chain's noise is therefore a pure function of
``(seed, chain index, step)`` and does not depend on how chains are grouped
into blocks or scheduled across threads.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = ["CounterStream", "StepNoise"]

_TWO_M53 = 2.0**-53


class CounterStream:
    """Factory of per-step noise for a family of chains.

    Parameters
    ----------
    seed : int
        Experiment seed (any nonnegative 64-bit integer).
    tag : int
        Distinguishes independent uses of the same seed (e.g. init vs steps).
    """

    def __init__(self, seed: int, tag: int = 0):
        if seed < 0:
            raise ValueError("seed must be nonnegative")
        self.seed = int(seed)
        self.tag = int(tag)

    def step(self, step: int, start: int, stop: int) -> "StepNoise":
        """Noise source for chains ``start..stop-1`` at chain step ``step``."""
        return StepNoise(self, step, start, stop)

    def _key(self, step, call):
        ss = np.random.SeedSequence([self.seed, self.tag, int(step), int(call)])
        return ss.generate_state(2, np.uint64)

    def uniforms(self, step, call, start, stop, width):
        """``(stop-start, width)`` uniforms on (0, 1] for the given chain range."""
        # Philox emits 4 uint64 per counter increment
        per_chain = math.ceil(width / 4)
        bg = np.random.Philox(key=self._key(step, call))
        # chains own disjoint counter ranges, so each can be sliced independently
        bg = bg.advance(start * per_chain) if start else bg
        raw = bg.random_raw((stop - start) * per_chain * 4).reshape(stop - start, per_chain * 4)
        return ((raw[:, :width] >> np.uint64(11)) + np.uint64(1)) * _TWO_M53


class StepNoise:
    """Noise for one chain step over a contiguous block of chains.

    Each call to :meth:`standard_normal` or :meth:`random` consumes a fresh,
    independent Philox key, so the sequence of calls made by a step must be
    the same for every block layout.
    """

    def __init__(self, stream: CounterStream, step: int, start: int, stop: int):
        self.stream = stream
        self.step = step
        self.start = start
        self.stop = stop
        self._call = 0

    @property
    def n(self) -> int:
        return self.stop - self.start

    def _next(self, width):
        u = self.stream.uniforms(self.step, self._call, self.start, self.stop, width)
        self._call += 1
        return u

    def random(self, shape=None):
        """Uniforms on (0, 1] with shape ``(n,)`` or ``(n, *shape)``."""
        tail = () if shape is None else tuple(np.atleast_1d(shape))
        width = int(np.prod(tail)) if tail else 1
        return self._next(width).reshape((self.n,) + tail)

    def standard_normal(self, shape=None):
        """Standard normals with shape ``(n,)`` or ``(n, *shape)`` (Box-Muller)."""
        tail = () if shape is None else tuple(np.atleast_1d(shape))
        width = int(np.prod(tail)) if tail else 1
        half = (width + 1) // 2
        u = self._next(2 * half)
        r = np.sqrt(-2.0 * np.log(u[:, :half]))
        theta = 2.0 * np.pi * u[:, half:]
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)], axis=1)[:, :width]
        return z.reshape((self.n,) + tail)
