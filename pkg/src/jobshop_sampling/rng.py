"""Pinned deterministic random streams.

Every stochastic component in the package draws from a SplitMix64 stream
(Steele, Lea & Flood's mixing function over a 64-bit counter advanced by the
golden-ratio increment).  The generator is deliberately tiny and fully
specified here so that instance generation and rollout sampling can be
reproduced bit-for-bit by an independent implementation:

  state_{i+1} = (state_i + 0x9E3779B97F4A7C15) mod 2^64
  output_i    = mix64(state_{i+1})

where ``mix64`` is the SplitMix64 finalizer.  Derived quantities are defined
on top of the raw 64-bit outputs:

  * floats in [0, 1):   (u64 >> 11) * 2^-53
  * integers below n:   u64 mod n   (modulo bias < n / 2^64, negligible for
    the bounded draws used here, all with n < 2^32)
  * shuffles:           Fisher-Yates, iterating i = len-1 .. 1 and swapping
    position i with a draw from [0, i].

Child seeds are derived, never sliced from a shared stream, so parallel
consumers are order-independent.
"""

from __future__ import annotations

import struct

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(value: int) -> int:
    """SplitMix64 finalizer: a bijective 64-bit avalanche mix."""
    value &= _MASK64
    value = ((value ^ (value >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    value = ((value ^ (value >> 27)) * 0x94D049BB133111EB) & _MASK64
    return value ^ (value >> 31)


def derive_seed(master_seed: int, *salts: int) -> int:
    """Derive a child seed from a master seed and integer salts.

    Defined as ``h = mix64(master); h = mix64(h ^ mix64(salt + GOLDEN))`` per
    salt, left to right.  Distinct salt tuples give independent streams.
    """
    state = mix64(master_seed & _MASK64)
    for salt in salts:
        state = mix64(state ^ mix64((salt + _GOLDEN) & _MASK64))
    return state


def float_bits(value: float) -> int:
    """IEEE-754 bit pattern of a float, for use as a seed salt."""
    return struct.unpack("<Q", struct.pack("<d", value))[0]


class RandomStream:
    """A SplitMix64 sequence owned by exactly one consumer."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return mix64(self._state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 1.1102230246251565e-16  # 2**-53

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("randrange requires n >= 1")
        return self.next_u64() % n

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in [low, high], both ends inclusive."""
        if high < low:
            raise ValueError("randint requires low <= high")
        return low + self.randrange(high - low + 1)

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> list[int]:
        items = list(range(n))
        self.shuffle(items)
        return items
