"""Destroy operator: pick a rarely used centre, cut the nearest free edges,
and compress the surviving segments into a bounded sub-problem."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .core import Instance, Tour, geometric_cost
from .errors import ContractViolation, DestroyInfeasible
from .spatial import GridIndex


class SelectionCounters:
    """Per-vertex count of how often a vertex took part in a sub-problem."""

    def __init__(self, n: int):
        self.count = np.zeros(n, dtype=np.int64)

    def __len__(self) -> int:
        return self.count.size


def pick_center(counters: SelectionCounters, rng: np.random.Generator) -> int:
    """Uniform draw among the vertices with the smallest count."""
    c = counters.count
    if c.size == 0:
        raise ContractViolation("empty selection counters")
    ties = np.flatnonzero(c == c.min())
    return int(ties[rng.integers(ties.size)])


def select_edge_positions(inst: Instance, t: Tour, center: int, m: int,
                          idx: GridIndex) -> np.ndarray:
    """Tour positions of the edges chosen by :func:`select_edges_to_delete`."""
    if m < 2:
        raise ContractViolation("m must be >= 2")
    if inst.n - inst.num_forced < 2:
        raise DestroyInfeasible("fewer than two non-forced edges remain")
    center = int(center)
    j = min(max(m, 8), len(idx))
    while True:
        cand = np.concatenate(([center], idx.knn(center, j)))
        picked = K.select_positions(cand, t.order, t.pos, inst.forced_nbr, m)
        if picked.size >= m or j >= len(idx):
            return picked
        j = min(2 * j, len(idx))


def select_edges_to_delete(inst: Instance, t: Tour, center: int, m: int,
                           idx: GridIndex) -> np.ndarray:
    """Up to ``m`` non-forced tour edges ranked by their nearer endpoint.

    Returns an ``(r, 2)`` array of canonical ``(u, v)`` pairs, nearest first.
    """
    p = select_edge_positions(inst, t, center, m, idx)
    a = t.order[p]
    b = t.order[(p + 1) % t.n]
    return np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1)


@dataclass
class SubProblem:
    """Bounded sub-TSP left after deleting edges from a parent tour.

    Sub-vertices are numbered in parent-tour order. A segment with two or
    more parent vertices keeps only its end vertices, joined by a
    temporarily fixed edge whose cost is the segment length.
    """

    sub_n: int
    sub_coords: np.ndarray
    temp_fixed: np.ndarray          # (r, 3) rows of (sub_u, sub_v, cost)
    to_parent: np.ndarray           # sub vertex -> parent vertex
    seg_start: np.ndarray           # parent tour position where each segment starts
    seg_len: np.ndarray             # parent vertices per segment
    sub_seg: np.ndarray             # sub vertex -> segment index
    sub_head: np.ndarray            # True if the sub vertex is its segment's first vertex
    fixed_nbr: np.ndarray           # (sub_n, 2) temp-fixed partner table
    metric_code: int
    parent_order: np.ndarray
    deleted_cost: int
    num_deleted: int

    @property
    def xs(self) -> np.ndarray:
        return np.ascontiguousarray(self.sub_coords[:, 0])

    @property
    def ys(self) -> np.ndarray:
        return np.ascontiguousarray(self.sub_coords[:, 1])

    def warm_start(self) -> np.ndarray:
        """The sub-tour inherited from the parent tour."""
        return np.arange(self.sub_n, dtype=np.int64)

    def segment_path(self, row: int) -> np.ndarray:
        """Parent vertices compressed by temp-fixed edge ``row``, ordered u -> v."""
        u = int(self.temp_fixed[row, 0])
        g = self.sub_seg[u]
        n = self.parent_order.size
        idx = (self.seg_start[g] + np.arange(self.seg_len[g])) % n
        path = self.parent_order[idx]
        return path if self.sub_head[u] else path[::-1]

    @property
    def segment_paths(self) -> dict[tuple[int, int], np.ndarray]:
        return {(int(r[0]), int(r[1])): self.segment_path(i)
                for i, r in enumerate(self.temp_fixed)}

    def cost_matrix(self) -> np.ndarray:
        """Dense sub-problem costs (geometric, temp-fixed pairs overridden)."""
        s = np.arange(self.sub_n)
        u, v = np.meshgrid(s, s, indexing="ij")
        c = geometric_cost(self.xs, self.ys, self.metric_code, u, v)
        for a, b, w in self.temp_fixed:
            c[a, b] = c[b, a] = w
        return c

    def tour_cost(self, sub_tour) -> int:
        """Cost of a sub-tour, temp-fixed edges at their segment cost."""
        order = np.asarray(sub_tour, dtype=np.int64)
        nxt = np.roll(order, -1)
        c = geometric_cost(self.xs, self.ys, self.metric_code, order, nxt)
        for slot in (0, 1):
            hit = self.fixed_nbr[order, slot] == nxt
            if hit.any():
                tf = self._fixed_cost_table()[order, slot]
                c = np.where(hit, tf, c)
        return int(c.sum())

    def _fixed_cost_table(self) -> np.ndarray:
        t = np.zeros((self.sub_n, 2), dtype=np.int64)
        for a, b, w in self.temp_fixed:
            t[a, 0 if self.fixed_nbr[a, 0] == b else 1] = w
            t[b, 0 if self.fixed_nbr[b, 0] == a else 1] = w
        return t

    def contains_fixed(self, sub_tour) -> bool:
        order = np.asarray(sub_tour, dtype=np.int64)
        if order.size != self.sub_n or np.bincount(order, minlength=self.sub_n).max(initial=0) != 1:
            return False
        if self.temp_fixed.shape[0] == 0:
            return True
        p = np.empty_like(order)
        p[order] = np.arange(order.size)
        d = np.abs(p[self.temp_fixed[:, 0]] - p[self.temp_fixed[:, 1]])
        return bool(np.all((d == 1) | (d == order.size - 1)))


def build_subproblem(inst: Instance, t: Tour, deleted, ecost: np.ndarray | None = None) -> SubProblem:
    """Cut ``deleted`` edges out of ``t`` and compress the segments.

    ``deleted`` is an ``(r, 2)`` edge array, or a 1-D array of tour
    positions. ``ecost`` (cost of the edge leaving each position) may be
    passed to avoid recomputing it.
    """
    n = t.n
    deleted = np.asarray(deleted, dtype=np.int64)
    if deleted.ndim == 2:
        u, v = deleted[:, 0], deleted[:, 1]
        pu = t.pos[u]
        fwd = t.order[(pu + 1) % n] == v
        bwd = t.order[(pu - 1) % n] == v
        if not np.all(fwd | bwd):
            raise ContractViolation("deleted edge is not a tour edge")
        positions = np.where(fwd, pu, (pu - 1) % n)
    else:
        positions = deleted
    positions = np.unique(positions)
    r = positions.size
    if r < 1:
        raise ContractViolation("nothing to delete")
    a = t.order[positions]
    b = t.order[(positions + 1) % n]
    fn = inst.forced_nbr
    if inst.forced and np.any((fn[a, 0] == b) | (fn[a, 1] == b)):
        raise ContractViolation("forced edges cannot be deleted")
    if ecost is None:
        ecost = inst.costs(t.order, np.roll(t.order, -1))
    csum = np.concatenate(([0], np.cumsum(ecost)))

    seg_start = (positions + 1) % n
    ends = np.roll(positions, -1)
    seg_len = (ends - positions) % n
    if r == 1:
        seg_len = np.array([n], dtype=np.int64)
    # segment cost = sum of edges strictly inside, positions seg_start .. end-1
    lo = seg_start
    hi = lo + seg_len - 1
    inside = np.where(hi <= n, csum[np.minimum(hi, n)] - csum[lo],
                      csum[n] - csum[lo] + csum[np.maximum(hi - n, 0)])

    multi = seg_len > 1
    sub_per_seg = np.where(multi, 2, 1)
    sub_n = int(sub_per_seg.sum())
    first_sub = np.concatenate(([0], np.cumsum(sub_per_seg)[:-1]))
    sub_seg = np.repeat(np.arange(r), sub_per_seg)
    sub_head = np.ones(sub_n, dtype=bool)
    tails = first_sub[multi] + 1
    sub_head[tails] = False
    offset = np.where(sub_head, 0, seg_len[sub_seg] - 1)
    to_parent = t.order[(seg_start[sub_seg] + offset) % n]

    heads = first_sub[multi]
    temp_fixed = np.stack([heads, tails, inside[multi]], axis=1).astype(np.int64)
    fixed_nbr = np.full((sub_n, 2), -1, dtype=np.int64)
    fixed_nbr[heads, 0] = tails
    fixed_nbr[tails, 0] = heads
    return SubProblem(
        sub_n=sub_n,
        sub_coords=inst.coords[to_parent],
        temp_fixed=temp_fixed.reshape(-1, 3),
        to_parent=to_parent,
        seg_start=seg_start.astype(np.int64),
        seg_len=seg_len.astype(np.int64),
        sub_seg=sub_seg.astype(np.int64),
        sub_head=sub_head,
        fixed_nbr=fixed_nbr,
        metric_code=inst.metric_code,
        parent_order=t.order,
        deleted_cost=int(ecost[positions].sum()),
        num_deleted=r,
    )


def update_counters(counters: SelectionCounters, sub: SubProblem | None) -> SelectionCounters:
    """Increment the count of every parent vertex present in ``sub``."""
    if sub is not None and sub.sub_n:
        np.add.at(counters.count, sub.to_parent, 1)
    return counters
