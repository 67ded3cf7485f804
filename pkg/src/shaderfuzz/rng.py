"""splitmix64 and the seed-derivation helpers built on it.

Every random decision in the toolkit (transform selection, input seeding,
sampler texels) goes through this module so results are identical across
platforms and Python versions.
"""

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns ``(new_state, output)``."""
    state = (state + _GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def derive(seed: int, *keys: int) -> int:
    """Hash a seed and a sequence of integer keys into one 64-bit value."""
    _, h = splitmix64(seed & MASK64)
    for k in keys:
        _, h = splitmix64(h ^ (k & MASK64))
    return h


def unit_f32(word: int) -> float:
    """Map a 64-bit word to a float32-exact value in [0, 1)."""
    return (word >> 40) * (1.0 / (1 << 24))


class SplitMix64:
    """Sequential generator used for transform selection."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state, out = splitmix64(self.state)
        return out

    def below(self, n: int) -> int:
        # rejection sampling keeps the draw exactly uniform
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % n

    def choice(self, seq):
        return seq[self.below(len(seq))]

    def unit(self) -> float:
        return unit_f32(self.next_u64())
