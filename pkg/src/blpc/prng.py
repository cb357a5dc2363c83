"""Seedable, platform-independent PRNG used for all stochastic behavior.

The generator is xoshiro256** (public-domain algorithm by Blackman and
Vigna), seeded through splitmix64. Every sampling decision and every
generated test weight in this package flows through this generator, so a
seed fully determines the output on any platform. The numba backend
re-implements the same integer recurrence on uint64 arrays; the two
implementations are bit-identical (covered by tests).

State layout: four unsigned 64-bit words. Uniform doubles are produced
from the top 53 bits of one draw: u = (x >> 11) * 2**-53, in [0, 1).
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_DOUBLE_SCALE = 2.0**-53


def _splitmix64(z: int) -> tuple[int, int]:
    """One step of splitmix64; returns (new_state, output)."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    x = z
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    x ^= x >> 31
    return z, x


def seed_state(seed: int) -> np.ndarray:
    """Expand a 64-bit seed into a xoshiro256** state vector (uint64[4])."""
    z = seed & _MASK
    words = []
    for _ in range(4):
        z, x = _splitmix64(z)
        words.append(x)
    if not any(words):
        words[0] = 1  # the all-zero state is a fixed point
    return np.array(words, dtype=np.uint64)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


def next_u64(state: np.ndarray) -> int:
    """Advance the state in place and return one uint64 draw."""
    s0, s1, s2, s3 = (int(w) for w in state)
    result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
    t = (s1 << 17) & _MASK
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
    return result


def next_double(state: np.ndarray) -> float:
    """Uniform double in [0, 1) from one draw."""
    return (next_u64(state) >> 11) * _DOUBLE_SCALE


class Rng:
    """Convenience wrapper holding a xoshiro256** state."""

    def __init__(self, seed: int = 0):
        self.state = seed_state(seed)

    def u64(self) -> int:
        return next_u64(self.state)

    def double(self) -> float:
        return next_double(self.state)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.double()

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection-free scaling of a double.

        Fine for the non-cryptographic uses here (n far below 2**53).
        """
        return int(self.double() * n)

    def fill_uniform(self, shape, lo: float, hi: float) -> np.ndarray:
        out = np.empty(int(np.prod(shape)), dtype=np.float64)
        for i in range(out.size):
            out[i] = self.uniform(lo, hi)
        return out.reshape(shape)
