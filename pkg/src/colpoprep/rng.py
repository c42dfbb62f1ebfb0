"""Deterministic 64-bit random streams.

Every source of randomness in this package (dataset splitting, augmentation
parameter draws, per-sample noise) flows through the splitmix64 generator
defined here. The generator was picked because its state advances additively,
so a stream can be evaluated scalar-by-scalar or as a vectorized block and
produce identical output, and because it is trivial to reimplement bit-for-bit
in any language with 64-bit integers.

Stream derivation (the seed-mix contract):

    h     = fnv1a64(key_utf8)
    state = mix64(mix64(mix64(seed) ^ h) ^ index)

where ``mix64`` is the splitmix64 finalizer applied after the golden-gamma
increment. Identical (seed, key, index) triples always yield identical
streams, independent of call order or thread count.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash of a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def mix64(z: int) -> int:
    """Splitmix64 state-to-output function: gamma increment plus finalizer."""
    z = (z + _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_stream(seed: int, key: str, index: int) -> "SplitMix64":
    """Derive an independent stream from (seed, key, index).

    Pure function of its arguments; see the module docstring for the exact
    mixing recipe.
    """
    h = fnv1a64(key.encode("utf-8"))
    state = mix64(mix64(mix64(seed & _MASK64) ^ h) ^ (index & _MASK64))
    return SplitMix64(state)


class SplitMix64:
    """Splitmix64 generator with scalar and block output paths.

    The k-th output after construction is ``finalize(state0 + k * gamma)``,
    which is what makes ``next_u64_block`` equivalent to k scalar calls.
    """

    def __init__(self, state: int):
        self._state = state & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def next_u64_block(self, n: int) -> np.ndarray:
        """Next n outputs as a uint64 array, advancing the state by n steps."""
        if n < 0:
            raise ValueError("block size must be non-negative")
        steps = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self._state) + steps * np.uint64(_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        out = z ^ (z >> np.uint64(31))
        self._state = (self._state + n * _GAMMA) & _MASK64
        return out

    def next_float(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_float_block(self, n: int) -> np.ndarray:
        return (self.next_u64_block(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + self.next_float() * (hi - lo)

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n). Uses the modulo reduction; the bias is
        below 2**-50 for every n used in this package."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def gaussian_block(self, n: int) -> np.ndarray:
        """n standard normal draws via Box-Muller on consecutive pairs.

        Pair k consumes uniforms (2k, 2k+1) and emits outputs (2k, 2k+1);
        an odd n still consumes the full last pair so the draw count is
        always 2 * ceil(n / 2).
        """
        if n == 0:
            return np.zeros(0, dtype=np.float64)
        pairs = (n + 1) // 2
        u = self.next_float_block(2 * pairs)
        u1, u2 = u[0::2], u[1::2]
        r = np.sqrt(-2.0 * np.log1p(-u1))
        theta = 2.0 * math.pi * u2
        z = np.empty(2 * pairs, dtype=np.float64)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        return z[:n]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle, high index down to 1."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]
