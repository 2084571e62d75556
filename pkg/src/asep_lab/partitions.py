"""Integer partitions indexing the residue expansion of the moment formula."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

MAX_WEIGHT = 20


@dataclass(frozen=True)
class Partition:
    """A partition lambda |- k as a weakly decreasing tuple of parts."""

    parts: tuple[int, ...]

    def __post_init__(self):
        if any(p <= 0 for p in self.parts):
            raise ValueError("parts must be positive")
        if any(a < b for a, b in zip(self.parts, self.parts[1:])):
            raise ValueError("parts must be weakly decreasing")

    @property
    def weight(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    def multiplicities(self) -> dict[int, int]:
        """m_j = number of parts equal to j."""
        m: dict[int, int] = {}
        for p in self.parts:
            m[p] = m.get(p, 0) + 1
        return m


def enumerate_partitions(k: int) -> list[Partition]:
    """All partitions of k in reverse-lexicographic order: (k), ..., (1^k)."""
    if not 1 <= k <= MAX_WEIGHT:
        raise ValueError(f"k must be in [1, {MAX_WEIGHT}], got {k}")

    out: list[Partition] = []

    def rec(remaining: int, mx: int, prefix: tuple[int, ...]):
        if remaining == 0:
            out.append(Partition(prefix))
            return
        for first in range(min(remaining, mx), 0, -1):
            rec(remaining - first, first, prefix + (first,))

    rec(k, k, ())
    return out


@lru_cache(maxsize=None)
def partition_count(k: int) -> int:
    """p(k) via Euler's pentagonal-number recurrence (independent of the
    enumeration above, so the two can cross-check each other)."""
    if k < 0:
        return 0
    if k == 0:
        return 1
    total = 0
    j = 1
    while True:
        g1 = j * (3 * j - 1) // 2
        g2 = j * (3 * j + 1) // 2
        if g1 > k and g2 > k:
            break
        sign = -1 if j % 2 == 0 else 1
        if g1 <= k:
            total += sign * partition_count(k - g1)
        if g2 <= k:
            total += sign * partition_count(k - g2)
        j += 1
    return total
