"""Incremental nearest-neighbour index: a logarithmic forest of kd-trees.

For ``n`` inserted points the forest holds one balanced kd-tree of ``2**i``
points for every set bit ``i`` of ``n``. An insert that clears low bits
merges those trees (plus the new point) into one tree of the next size, so
each point is rebuilt O(log n) times overall.

Points are stored packed in insertion order: the larger (older) trees come
first and each tree is a contiguous chunk laid out as an implicit kd-tree
(see :func:`dynplan.kernels.kd_build`). Merging the small trees therefore
only ever rebuilds the tail of the arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import kernels
from .common import ContractViolation, MetricsCounters


class EmptyIndexError(LookupError):
    pass


@dataclass(frozen=True)
class Entry:
    point: tuple
    id: int
    alive: bool = True


class LogForest:
    def __init__(self, dim: int = 2, capacity: int = 16):
        self.dim = dim
        self._pts = np.empty((capacity, dim))
        self._ids = np.empty(capacity, np.int64)
        self._alive = np.zeros(capacity, bool)
        self._chunks: list[list[int]] = []  # [lo, hi) per tree, largest first
        self._chunk_arr = np.empty((0, 2), np.int64)
        self._pos: dict[int, int] = {}  # id -> packed position
        self.n = 0
        self.n_alive = 0
        self.last_id: int | None = None
        self.reinserted = 0

    def __len__(self) -> int:
        return self.n_alive

    @property
    def tree_sizes(self) -> list[int]:
        return [hi - lo for lo, hi in self._chunks]

    def _grow(self):
        cap = 2 * self._pts.shape[0]
        pts = np.empty((cap, self.dim))
        pts[: self.n] = self._pts[: self.n]
        ids = np.empty(cap, np.int64)
        ids[: self.n] = self._ids[: self.n]
        alive = np.zeros(cap, bool)
        alive[: self.n] = self._alive[: self.n]
        self._pts, self._ids, self._alive = pts, ids, alive

    def insert(self, p, id: int) -> None:
        if self.last_id is not None and id <= self.last_id:
            raise ContractViolation(f"ids must increase: got {id} after {self.last_id}")
        if self.n == self._pts.shape[0]:
            self._grow()
        i = self.n
        self._pts[i] = p
        self._ids[i] = id
        self._alive[i] = True
        self.n += 1
        self.n_alive += 1
        self.last_id = id
        chunks = self._chunks
        chunks.append([i, i + 1])
        merged = False
        while len(chunks) >= 2 and chunks[-1][1] - chunks[-1][0] == chunks[-2][1] - chunks[-2][0]:
            chunks.pop()
            chunks[-1][1] = self.n
            merged = True
        if merged:
            lo, hi = chunks[-1]
            self.reinserted += hi - lo - 1
            kernels.kd_build(self._pts, self._ids, lo, hi)
            self._pos.update(zip(self._ids[lo:hi].tolist(), range(lo, hi)))
        else:
            self._pos[id] = i
        self._chunk_arr = np.array(chunks, np.int64)

    def kill(self, id: int) -> None:
        """Mark an entry dead; compacts once more than half are dead."""
        j = self._pos[id]
        if self._alive[j]:
            self._alive[j] = False
            self.n_alive -= 1
        if self.n_alive * 2 < self.n:
            fresh = LogForest.rebuild_from(self.entries(), dim=self.dim)
            self.__dict__.update(fresh.__dict__)

    def nearest(self, q, m: MetricsCounters | None = None) -> tuple[int, np.ndarray]:
        if self.n_alive == 0:
            raise EmptyIndexError("nearest() on an index with no alive entries")
        if m is not None:
            m.nn_lookups += 1
        j = kernels.kd_nearest(self._pts, self._ids, self._alive, self._chunk_arr,
                               np.asarray(q, dtype=float))
        return int(self._ids[j]), self._pts[j]

    def entries(self) -> list[Entry]:
        order = np.argsort(self._ids[: self.n], kind="stable")
        return [Entry(tuple(self._pts[j]), int(self._ids[j]), bool(self._alive[j]))
                for j in order]

    @classmethod
    def rebuild_from(cls, entries: Iterable[Entry], dim: int = 2) -> "LogForest":
        live = sorted((e for e in entries if e.alive), key=lambda e: e.id)
        if live:
            ids = np.array([e.id for e in live], np.int64)
            pts = np.array([e.point for e in live], float).reshape(len(live), -1)
            return cls.from_arrays(pts, ids)
        return cls(dim=dim)

    @classmethod
    def from_arrays(cls, pts: np.ndarray, ids: np.ndarray) -> "LogForest":
        """Bulk build from points already sorted by increasing id."""
        n, dim = pts.shape
        f = cls(dim=dim, capacity=max(16, 1 << max(n - 1, 1).bit_length()))
        if n == 0:
            return f
        if np.any(np.diff(ids) <= 0):
            raise ContractViolation("ids must be strictly increasing")
        f._pts[:n] = pts
        f._ids[:n] = ids
        f._alive[:n] = True
        f.n = f.n_alive = n
        f.last_id = int(ids[-1])
        lo = 0
        for bit in range(n.bit_length() - 1, -1, -1):
            if n >> bit & 1:
                hi = lo + (1 << bit)
                kernels.kd_build(f._pts, f._ids, lo, hi)
                f._chunks.append([lo, hi])
                lo = hi
        f._chunk_arr = np.array(f._chunks, np.int64)
        f._pos = {int(i): j for j, i in enumerate(f._ids[:n])}
        return f


def brute_force_nearest(points: np.ndarray, ids: np.ndarray, q) -> int:
    """Linear-scan oracle: id of the closest point, smallest id on ties."""
    d2 = ((np.asarray(points, float) - np.asarray(q, float)) ** 2).sum(axis=1)
    best = d2.min()
    return int(min(ids[d2 == best]))
