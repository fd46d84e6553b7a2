"""Non-dominated archive over (latency, energy)."""

from __future__ import annotations

from typing import Generic, Iterator, Optional, Sequence, TypeVar

import numpy as np

from ..errors import ConfigurationError

T = TypeVar("T")


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    better = False
    for x, y in zip(a, b):
        if x > y:
            return False
        if x < y:
            better = True
    return better


def crowding_distance(points: np.ndarray) -> np.ndarray:
    n, m = points.shape
    dist = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for k in range(m):
        order = np.argsort(points[:, k], kind="stable")
        lo, hi = points[order[0], k], points[order[-1], k]
        dist[order[0]] = dist[order[-1]] = np.inf
        if hi > lo:
            dist[order[1:-1]] += (points[order[2:], k] - points[order[:-2], k]) / (hi - lo)
    return dist


class ParetoArchive(Generic[T]):
    """Bounded set of mutually non-dominated items.

    ``objectives(item)`` gives the minimised objective vector and ``key(item)``
    a string used for deterministic tie-breaking. Items with identical
    objectives are all kept (none dominates another).
    """

    def __init__(self, objectives, key, capacity: Optional[int] = 256):
        if capacity is not None and capacity < 1:
            raise ConfigurationError("archive capacity must be >= 1")
        self._obj = objectives
        self._key = key
        self.capacity = capacity
        self._items: dict[str, T] = {}
        self._f: dict[str, tuple] = {}
        self._mat: Optional[np.ndarray] = None
        self._mat_keys: list[str] = []
        self._sorted: Optional[list[T]] = None

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self) -> Iterator[T]:
        return iter(self.items())

    def __contains__(self, key: str) -> bool:
        return key in self._items

    def items(self) -> list[T]:
        """Members sorted by objectives, then key."""
        if self._sorted is None:
            self._sorted = sorted(self._items.values(),
                                  key=lambda it: (self._f[self._key(it)], self._key(it)))
        return list(self._sorted)

    def front(self) -> list[tuple[float, ...]]:
        return sorted(set(self._f.values()))

    def _matrix(self) -> np.ndarray:
        if self._mat is None:
            self._mat_keys = list(self._items)
            self._mat = np.array([self._f[k] for k in self._mat_keys], dtype=float).reshape(
                len(self._mat_keys), -1)
        return self._mat

    def _changed(self) -> None:
        self._mat = None
        self._sorted = None

    def add(self, item: T) -> bool:
        """Insert ``item``; returns True if it was accepted."""
        k = self._key(item)
        if k in self._items:
            return False
        f = tuple(float(v) for v in self._obj(item))
        if self._items:
            m = self._matrix()
            fv = np.asarray(f)
            le = (m <= fv).all(axis=1)
            lt = (m < fv).any(axis=1)
            if (le & lt).any():
                return False
            ge = (m >= fv).all(axis=1)
            gt = (m > fv).any(axis=1)
            for i in np.flatnonzero(ge & gt):
                kk = self._mat_keys[i]
                del self._items[kk]
                del self._f[kk]
        self._items[k] = item
        self._f[k] = f
        self._changed()
        if self.capacity is not None and len(self._items) > self.capacity:
            self._evict()
        return k in self._items

    def _evict(self) -> None:
        keys = sorted(self._items)
        pts = np.array([self._f[k] for k in keys], dtype=float)
        # crowding in log space, since latency and energy span decades
        with np.errstate(divide="ignore"):
            dist = crowding_distance(np.log(np.maximum(pts, 1e-300)))
        victim = min(range(len(keys)), key=lambda i: (dist[i], keys[i]))
        del self._items[keys[victim]]
        del self._f[keys[victim]]
        self._changed()

    def merge(self, other: "ParetoArchive[T]") -> None:
        for it in other.items():
            self.add(it)
