"""Uniform-grid k-nearest-neighbour index over a subset of instance vertices."""
from __future__ import annotations

import math

import numpy as np

from . import _kernels as K
from .errors import ContractViolation


class GridIndex:
    """Bucket grid with expanding-ring kNN queries.

    Cell size is chosen so each cell holds about one member on average.
    Distances are exact squared Euclidean distances; ties go to the lower id.
    """

    def __init__(self, xs: np.ndarray, ys: np.ndarray, members: np.ndarray):
        members = np.unique(np.asarray(members, dtype=np.int64))
        if members.size == 0:
            raise ContractViolation("cannot index an empty member set")
        self.xs = xs
        self.ys = ys
        self.members = members
        mx = xs[members]
        my = ys[members]
        self.x0 = float(mx.min())
        self.y0 = float(my.min())
        side = max(float(mx.max()) - self.x0, float(my.max()) - self.y0)
        if side <= 0.0:
            self.cell_size = 1.0
            self.ncx = self.ncy = 1
        else:
            self.cell_size = side / math.ceil(math.sqrt(members.size))
            self.ncx = int((float(mx.max()) - self.x0) / self.cell_size) + 1
            self.ncy = int((float(my.max()) - self.y0) / self.cell_size) + 1
        gx = np.minimum(((mx - self.x0) / self.cell_size).astype(np.int64), self.ncx - 1)
        gy = np.minimum(((my - self.y0) / self.cell_size).astype(np.int64), self.ncy - 1)
        cell = gy * self.ncx + gx
        order = np.argsort(cell, kind="stable")
        self.cell_items = members[order]
        counts = np.bincount(cell, minlength=self.ncx * self.ncy)
        self.cell_start = np.zeros(self.ncx * self.ncy + 1, dtype=np.int64)
        np.cumsum(counts, out=self.cell_start[1:])

    def __len__(self) -> int:
        return int(self.members.size)

    @property
    def _grid(self):
        return (self.x0, self.y0, self.cell_size, self.ncx, self.ncy,
                self.cell_start, self.cell_items, self.xs, self.ys)

    def buckets(self) -> dict[tuple[int, int], np.ndarray]:
        """Non-empty buckets keyed by ``(cx, cy)``."""
        out = {}
        for c in range(self.ncx * self.ncy):
            lo, hi = self.cell_start[c], self.cell_start[c + 1]
            if hi > lo:
                out[(c % self.ncx, c // self.ncx)] = self.cell_items[lo:hi]
        return out

    def knn_point(self, x: float, y: float, j: int, exclude: int = -1) -> np.ndarray:
        if j < 1:
            raise ContractViolation("j must be >= 1")
        # per-call scratch keeps concurrent queries independent
        buf_id = np.empty(self.members.size, dtype=np.int64)
        buf_d = np.empty(self.members.size, dtype=np.float64)
        return K.knn_point(float(x), float(y), int(exclude), int(j), *self._grid,
                           buf_id, buf_d)

    def knn(self, center: int, j: int) -> np.ndarray:
        return self.knn_point(self.xs[center], self.ys[center], j, exclude=center)

    def _local_order(self, qids: np.ndarray) -> np.ndarray:
        # visiting queries cell by cell keeps the grid walk cache-resident
        gx = np.clip(((self.xs[qids] - self.x0) / self.cell_size).astype(np.int64), 0, self.ncx - 1)
        gy = np.clip(((self.ys[qids] - self.y0) / self.cell_size).astype(np.int64), 0, self.ncy - 1)
        return np.argsort(gy * self.ncx + gx, kind="stable")

    def knn_table(self, qids, j: int) -> np.ndarray:
        """``(len(qids), j)`` neighbour table, rows padded with -1."""
        qids = np.asarray(qids, dtype=np.int64)
        perm = self._local_order(qids)
        out = np.empty((qids.size, int(j)), dtype=np.int64)
        out[perm] = K.knn_many(qids[perm], int(j), *self._grid)
        return out

    def nearest(self, qids) -> np.ndarray:
        """Closest member for each query vertex (may be the vertex itself)."""
        qids = np.asarray(qids, dtype=np.int64)
        perm = self._local_order(qids)
        out = np.empty(qids.size, dtype=np.int64)
        out[perm] = K.nearest_member(qids[perm], *self._grid)
        return out


def build_index(inst, members=None) -> GridIndex:
    """Index ``members`` (default: all vertices) of ``inst``."""
    if members is None:
        members = np.arange(inst.n, dtype=np.int64)
    return GridIndex(inst.xs, inst.ys, members)


def query_knn(idx: GridIndex, center: int, j: int) -> np.ndarray:
    """The ``min(j, |members|)`` members nearest ``center``, center excluded."""
    return idx.knn(int(center), int(j))


def hilbert_keys(xs: np.ndarray, ys: np.ndarray, bits: int = 16) -> np.ndarray:
    """Position of each point along a Hilbert curve over its bounding box."""
    x0, y0 = float(xs.min()), float(ys.min())
    side = max(float(xs.max()) - x0, float(ys.max()) - y0) or 1.0
    return K.hilbert_keys(np.ascontiguousarray(xs, dtype=np.float64),
                          np.ascontiguousarray(ys, dtype=np.float64), x0, y0, side, bits)
