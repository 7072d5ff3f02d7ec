"""Seeded random streams.

All randomness flows through :class:`RngState`, which wraps numpy's
``Generator`` over the Philox-4x64 counter-based bit generator keyed by
``SeedSequence(seed, spawn_key=(stream,))``.  Same ``(seed, stream)`` gives
the same draws on every platform; system entropy is never consulted.
"""
import numpy as np

SEED_MASK = (1 << 64) - 1


class RngState:
    def __init__(self, seed, stream=0):
        seed = int(seed)
        if not 0 <= seed <= SEED_MASK:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        self.seed = seed
        self.stream = int(stream)
        ss = np.random.SeedSequence(seed, spawn_key=(self.stream,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def spawn(self, stream):
        """Independent stream keyed by the same seed."""
        return RngState(self.seed, stream)

    def random(self, size=None):
        return self.generator.random(size)

    def integers(self, high, size=None):
        return self.generator.integers(0, high, size=size, dtype=np.int64)

    def permutation(self, n):
        return self.generator.permutation(n)

    def __repr__(self):
        return f"RngState(seed={self.seed}, stream={self.stream})"


def trial_seed(seed, trial):
    """Seed for trial ``trial`` of an experiment: ``seed XOR (trial + 1)``."""
    return (int(seed) ^ (int(trial) + 1)) & SEED_MASK
