"""Seeded, splittable deterministic random number generation.

All randomness in this package flows through :class:`SplitMix64`, a
64-bit SplitMix generator.  Independent streams for parallel trials are
derived with :func:`derive_seed`, so trial ``i`` of a run is a pure
function of ``(master_seed, i)`` regardless of execution order or
thread count.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_LOG2 = math.log(2.0)


def mix64(z: int) -> int:
    """SplitMix64 finalizer: a bijective 64-bit mixing function."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed for the ``index``-th child stream of ``master_seed``.

    Defined as ``mix64(master_seed + (index + 1) * GOLDEN)`` with the
    SplitMix64 golden-ratio increment; documented so that alternate
    implementations can reproduce streams exactly.
    """
    return mix64((master_seed + (index + 1) * _GOLDEN) & _MASK64)


class SplitMix64:
    """SplitMix64 word stream with convenience draws.

    Not thread safe: each concurrent task must own its stream (use
    :meth:`spawn`).
    """

    __slots__ = ("seed", "_state")

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._state = self.seed

    def next_word(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return mix64(self._state)

    def spawn(self, index: int) -> "SplitMix64":
        """Child stream ``index``; independent of this stream's position."""
        return SplitMix64(derive_seed(self.seed, index))

    def bits(self, n: int) -> int:
        """Uniform n-bit integer (bit i of the result is coordinate i+1)."""
        if n <= 0:
            return 0
        v = 0
        for shift in range(0, n, 64):
            v |= self.next_word() << shift
        return v & ((1 << n) - 1)

    def bit(self) -> int:
        return self.next_word() >> 63

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection on the top bits."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        nbits = (bound - 1).bit_length() or 1
        while True:
            v = self.bits(nbits)
            if v < bound:
                return v

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_word() >> 11) * (2.0**-53)

    def bernoulli(self, p: float) -> int:
        return 1 if self.random() < p else 0

    def geometric_gap(self, p: float) -> int:
        """Failures before the first success of a Bernoulli(p) sequence.

        Inversion method; used for sparse bit sampling.  Requires 0 < p < 1.
        """
        # 1 - random() lies in (0, 1], avoiding log(0).
        u = 1.0 - self.random()
        return int(math.log(u) / math.log1p(-p))
