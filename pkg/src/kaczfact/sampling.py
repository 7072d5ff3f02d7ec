"""Index selection for both reduction levels.

Target selection (which row of ``A`` / column of ``S`` to update) draws from a
:class:`WithoutReplacementPool`.  Block selection (which equations enter a
Kaczmarz step) draws a fresh subset every subiteration, either uniformly or
proportionally to squared norms.
"""
import math

import numpy as np

from . import kernels
from .errors import BlockTooLarge, DegenerateWeights


def uniform_block(universe, r, rng):
    """``r`` distinct indices from ``range(universe)``, every subset equally likely."""
    if r < 1:
        raise ValueError("block size must be at least 1")
    if r > universe:
        raise BlockTooLarge(f"block of {r} requested from {universe} indices")
    if r == universe:
        return rng.permutation(universe)
    return rng.generator.choice(universe, size=r, replace=False)


def weighted_block(sq_norms, r, rng):
    """``r`` distinct indices drawn one at a time, each with probability
    proportional to its weight among the indices not yet chosen.

    Consumes exactly ``r`` uniforms from ``rng``.
    """
    w = np.asarray(sq_norms, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError("weights must be a vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    if r < 1:
        raise ValueError("block size must be at least 1")
    positive = int(np.count_nonzero(w > 0))
    if positive < r:
        raise DegenerateWeights(f"{positive} positive weights, {r} indices requested")
    return kernels.weighted_draw(w, rng.random(r))


class WithoutReplacementPool:
    """Shuffled deck over ``range(universe)``; reshuffled when exhausted."""

    def __init__(self, universe):
        if universe < 1:
            raise ValueError("universe must be non-empty")
        self.universe = int(universe)
        self._order = None
        self._cursor = 0

    @property
    def draws_since_refill(self):
        return self._cursor if self._order is not None else 0

    @property
    def remaining(self):
        if self._order is None:
            return np.arange(self.universe)
        return self._order[self._cursor:]

    def next(self, rng):
        if self._order is None or self._cursor == self.universe:
            self._order = rng.permutation(self.universe)
            self._cursor = 0
        idx = int(self._order[self._cursor])
        self._cursor += 1
        return idx


def next_target(pool, rng):
    return pool.next(rng)


def update_schedule(m, n):
    """(row updates, column updates) per stochastic step, proportional to shape."""
    if m < 1 or n < 1:
        raise ValueError("dimensions must be positive")
    if m >= n:
        return math.ceil(m / n), 1
    return 1, math.ceil(n / m)
