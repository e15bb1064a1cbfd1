"""Deterministic, implementation-portable pseudo-random numbers.

Everything random in the package (test point sets, random initial fields,
random piecewise-linear profiles) flows from a single 64-bit seed through
SplitMix64, so runs reproduce bit-for-bit across platforms and are easy to
re-derive in any language.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 generator (Steele, Lea, Flood 2014 finalizer constants).

    state' = state + 0x9E3779B97F4A7C15;  output = mix(state') with the
    xor-shift/multiply finalizer.  `uniform` maps the top 53 bits to [0, 1).
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        u = (self.next_u64() >> 11) * 2.0 ** -53
        return lo + (hi - lo) * u

    def uniforms(self, n: int, lo: float = 0.0, hi: float = 1.0) -> list[float]:
        return [self.uniform(lo, hi) for _ in range(n)]

    def choice_sign(self) -> float:
        return 1.0 if self.next_u64() & 1 else -1.0

    def split(self) -> "SplitMix64":
        """Child generator seeded from this stream (for independent substreams)."""
        return SplitMix64(self.next_u64())
