"""Counter-based random streams and order-fixed block reductions.

Every random draw in the package comes from a Philox generator keyed by
(seed, stream) whose counter is set from a block index. Work is cut into
blocks of ``BLOCK_SIZE`` samples; blocks may be evaluated by any number of
workers but their partial results are always merged in block order, so the
output only depends on (seed, budget).
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK_SIZE = 8192
_MASK = (1 << 64) - 1

# stream ids
INTERIOR = 1
BOUNDARY = 2
SURFACE = 3
UNIFORM = 4
RESTART = 5
DIRECTIONS = 6
AUX = 7


def generator(seed, stream, block=0):
    key = np.array([int(seed) & _MASK, int(stream) & _MASK], dtype=np.uint64)
    counter = np.array([0, 0, int(block) & _MASK, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def block_sizes(count, block=BLOCK_SIZE):
    count = int(count)
    full, rest = divmod(count, block)
    sizes = [block] * full
    if rest:
        sizes.append(rest)
    return sizes


def map_blocks(fn, sizes, workers=1):
    """Apply ``fn(index, size)`` to every block, returning results in block order."""
    args = list(enumerate(sizes))
    if workers is None or workers <= 1 or len(args) <= 1:
        return [fn(i, s) for i, s in args]
    with ThreadPoolExecutor(max_workers=int(workers)) as pool:
        return list(pool.map(lambda a: fn(*a), args))


class Moments:
    """Count, mean and centred cross-product sum of feature vectors.

    Merging uses the pairwise update of Chan et al., applied in a fixed order.
    """

    __slots__ = ("n", "mean", "m2")

    def __init__(self, n, mean, m2):
        self.n = n
        self.mean = mean
        self.m2 = m2

    @classmethod
    def of(cls, y):
        y = np.asarray(y, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        n = y.shape[0]
        if n == 0:
            d = y.shape[1]
            return cls(0, np.zeros(d), np.zeros((d, d)))
        mean = y.mean(axis=0)
        c = y - mean
        return cls(n, mean, c.T @ c)

    def merge(self, other):
        if other.n == 0:
            return self
        if self.n == 0:
            return other
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.n / n)
        m2 = self.m2 + other.m2 + np.outer(delta, delta) * (self.n * other.n / n)
        return Moments(n, mean, m2)

    @staticmethod
    def combine(parts):
        parts = list(parts)
        while len(parts) > 1:
            merged = [parts[i].merge(parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
            if len(parts) % 2:
                merged.append(parts[-1])
            parts = merged
        return parts[0]

    def covariance_of_mean(self):
        """Covariance matrix of the sample mean."""
        if self.n < 2:
            return np.zeros_like(self.m2)
        return self.m2 / (self.n - 1) / self.n
