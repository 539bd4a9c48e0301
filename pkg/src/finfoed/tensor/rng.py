"""Seeded, splittable xoshiro256** generator.

The generator runs ``LANES`` independent xoshiro256** states in lock-step so a
refill costs a handful of vectorised numpy ops. Lane states are seeded from a
splitmix64 stream, as the xoshiro authors recommend. Normals use Box-Muller.
"""
from __future__ import annotations

import numpy as np

LANES = 256
_MASK = (1 << 64) - 1


def splitmix64(x: int) -> tuple[int, int]:
    """One splitmix64 step; returns (new_state, output)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return x, z ^ (z >> 31)


def _rotl(x: np.ndarray, k: int) -> np.ndarray:
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


class Rng:
    """Deterministic random stream; identical seeds give identical streams."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK
        sm = self.seed
        words = []
        for _ in range(4 * LANES):
            sm, out = splitmix64(sm)
            words.append(out)
        # state[j, lane] is word j of that lane
        self._state = np.array(words, dtype=np.uint64).reshape(LANES, 4).T.copy()
        self._buffer = np.empty(0, dtype=np.uint64)

    def _refill(self) -> np.ndarray:
        s0, s1, s2, s3 = self._state
        with np.errstate(over="ignore"):
            result = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
        t = s1 << np.uint64(17)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        self._state[3] = _rotl(s3, 45)
        return result

    def next_uint64(self, n: int) -> np.ndarray:
        """The next ``n`` raw 64-bit outputs of the stream."""
        chunks = [self._buffer]
        have = len(self._buffer)
        while have < n:
            block = self._refill()
            chunks.append(block)
            have += len(block)
        pool = np.concatenate(chunks)
        self._buffer = pool[n:]
        return pool[:n]

    def uniform(self, size=None, low: float = 0.0, high: float = 1.0):
        """Uniform doubles on [low, high) using the top 53 bits."""
        n = int(np.prod(size)) if size is not None else 1
        u = (self.next_uint64(n) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
        u = low + (high - low) * u
        return u.reshape(size) if size is not None else float(u[0])

    def standard_normal(self, size=None):
        n = int(np.prod(size)) if size is not None else 1
        m = (n + 1) // 2
        u1 = 1.0 - self.uniform(m)          # (0, 1], keeps log finite
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        z = np.empty(2 * m)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        z = z[:n]
        return z.reshape(size) if size is not None else float(z[0])

    def normal(self, loc=0.0, scale=1.0, size=None):
        return loc + scale * self.standard_normal(size)

    def integers(self, low: int, high: int, size=None):
        """Integers on [low, high)."""
        span = high - low
        if span <= 0:
            raise ValueError(f"empty range [{low}, {high})")
        v = np.floor(self.uniform(size) * span).astype(np.int64) + low
        return np.minimum(v, high - 1) if size is not None else int(min(v, high - 1))

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of range(n)."""
        perm = np.arange(n)
        draws = self.uniform(max(n - 1, 0))
        for i in range(n - 1, 0, -1):
            j = int(draws[n - 1 - i] * (i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def split(self, key: int) -> "Rng":
        """Derive an independent child stream; does not advance this one."""
        sm = (self.seed ^ ((int(key) * 0xD1B54A32D192ED03) & _MASK)) & _MASK
        sm, derived = splitmix64(sm)
        _, derived2 = splitmix64(derived ^ 0x5851F42D4C957F2D)
        return Rng(derived2)
