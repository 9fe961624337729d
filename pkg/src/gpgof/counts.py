"""Count data container."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class CountSample:
    """An iid sample of nonnegative counts.

    ``freq[k]`` is the number of observations equal to ``k`` for
    ``k = 0..m1``; everything downstream (moments, relative frequencies,
    statistics) is computed from ``freq`` so that two samples with the same
    multiset of values give bit-identical results regardless of order.
    """

    counts: np.ndarray
    freq: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1:
            raise ValueError("counts must be one-dimensional")
        if counts.size == 0:
            raise ValueError("empty sample")
        if not np.issubdtype(counts.dtype, np.integer):
            as_int = counts.astype(np.int64)
            if not np.array_equal(as_int, counts):
                raise ValueError("counts must be integers")
            counts = as_int
        counts = counts.astype(np.int64)
        if counts.min() < 0:
            raise ValueError("counts must be nonnegative")
        counts.setflags(write=False)
        freq = np.bincount(counts)
        freq.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "freq", freq)

    @classmethod
    def from_frequencies(cls, values, frequencies) -> "CountSample":
        values = np.asarray(values, dtype=np.int64)
        frequencies = np.asarray(frequencies, dtype=np.int64)
        if values.shape != frequencies.shape:
            raise ValueError("values and frequencies differ in length")
        if np.any(frequencies < 1):
            raise ValueError("frequencies must be >= 1")
        order = np.argsort(values, kind="stable")
        return cls(np.repeat(values[order], frequencies[order]))

    @property
    def n(self) -> int:
        return int(self.counts.size)

    @property
    def m1(self) -> int:
        return int(self.freq.size - 1)

    @property
    def rel_freq(self) -> np.ndarray:
        return self.freq / self.n

    def rel_freq_exact(self) -> list[Fraction]:
        return [Fraction(int(f), self.n) for f in self.freq]

    def mean(self) -> float:
        k = np.arange(self.freq.size)
        return float(self.freq @ k) / self.n

    def variance(self) -> float:
        """Unbiased (n - 1) sample variance."""
        if self.n < 2:
            raise ValueError("variance needs at least two observations")
        k = np.arange(self.freq.size)
        xbar = self.mean()
        return float(self.freq @ (k - xbar) ** 2) / (self.n - 1)

    def __len__(self) -> int:
        return self.n
