"""Shared deterministic PRNG for the forest kernels.

Both kernel backends (compiled and NumPy) implement exactly this generator so
that trained forests are bit-identical across them.  Any change here must be
mirrored in _forest_cy.pyx.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """SplitMix64 output scrambler; a bijection on 64-bit integers."""
    z = x & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Minimal SplitMix64 stream; ``next_below(n)`` maps draws into [0, n)."""

    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def next_below(self, n: int) -> int:
        return self.next_u64() % n


def tree_seed(base_seed: int, tree_index: int) -> int:
    """Starting PRNG state for one tree, decorrelated from its neighbours."""
    return mix64((base_seed + (tree_index + 1) * GOLDEN) & MASK64)
