"""Initial tour: sampled nearest-neighbour skeleton, insertion after the
closest sample, then windowed 2-opt over consecutive sample sub-paths."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .core import Instance, Tour, edge_costs_along
from .errors import ContractViolation
from .spatial import GridIndex, hilbert_keys


@dataclass
class InitConfig:
    samples_exponent: float = 2.0 / 3.0
    window_subpaths: int = 3
    neighbors: int = 8


def _units(fn: np.ndarray):
    """Forced paths as atomic units. Returns (rep vertex per unit, unit paths)."""
    n = fn.shape[0]
    if not np.any(fn >= 0):
        return np.arange(n, dtype=np.int64), None
    seen = np.zeros(n, dtype=bool)
    reps, paths = [], []
    deg = (fn >= 0).sum(axis=1)
    # walk each path from an end vertex; a full forced cycle has no end
    for s in list(np.flatnonzero(deg <= 1)) + list(range(n)):
        if seen[s]:
            continue
        path = [int(s)]
        seen[s] = True
        prev, cur = -1, int(s)
        while True:
            nxt = [int(x) for x in fn[cur] if x >= 0 and x != prev and not seen[x]]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            seen[cur] = True
            path.append(cur)
        reps.append(path[0])
        paths.append(np.array(path, dtype=np.int64))
    return np.array(reps, dtype=np.int64), paths


def two_opt_window(inst: Instance, t: Tour, window_start: int, window_len: int,
                   neighbors: np.ndarray | None = None) -> Tour:
    """2-opt restricted to edges inside ``window_len`` consecutive positions.

    The window's two end vertices stay in place; forced edges are never
    removed. With ``neighbors`` the search uses candidate lists, otherwise
    it scans every in-window edge pair until none improves.
    """
    if window_len < 4:
        raise ContractViolation("window_len must be >= 4")
    if window_len > t.n:
        raise ContractViolation("window longer than the tour")
    order = t.order.copy()
    pos = t.pos.copy()
    start = int(window_start) % t.n
    if neighbors is None:
        delta = K.window_2opt_full(order, pos, inst.xs, inst.ys, inst.metric_code,
                                   inst.forced_nbr, start, int(window_len))
    else:
        inq = np.zeros(t.n, dtype=np.bool_)
        queue = np.empty(window_len, dtype=np.int64)
        delta = K.window_2opt_nl(order, pos, inst.xs, inst.ys, inst.metric_code,
                                 inst.forced_nbr, np.asarray(neighbors, dtype=np.int64),
                                 start, int(window_len), inq, queue)
    if delta == 0:
        return t
    return Tour(order, pos, t.cost + int(delta))


def build_initial_tour(inst: Instance, cfg=None, rng: np.random.Generator | None = None) -> Tour:
    """Feasible starting tour in sub-quadratic time.

    ``cfg`` may be an :class:`InitConfig` or any object with an ``init``
    attribute holding one.
    """
    icfg = getattr(cfg, "init", cfg) or InitConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    n = inst.n
    # relabel along a Hilbert curve: ids become spatially coherent, which
    # keeps every later pass cache friendly and gives the insertion order
    perm = np.argsort(hilbert_keys(inst.xs, inst.ys), kind="stable")
    inv = np.empty(n, dtype=np.int64)
    inv[perm] = np.arange(n)
    xs = np.ascontiguousarray(inst.xs[perm])
    ys = np.ascontiguousarray(inst.ys[perm])
    fn = inst.forced_nbr[perm]
    fn = np.where(fn >= 0, inv[np.maximum(fn, 0)], -1)
    reps, paths = _units(fn)
    U = reps.size
    skeleton = None
    if U <= 3:
        unit_order = reps
    else:
        S = min(U, max(3, math.ceil(U ** icfg.samples_exponent)))
        samples = np.sort(rng.choice(reps, size=S, replace=False))
        sidx = GridIndex(xs, ys, samples)
        skeleton = K.nn_tour(samples[0], *sidx._grid)
        rank = np.empty(n, dtype=np.int64)
        rank[skeleton] = np.arange(S)
        is_sample = np.zeros(n, dtype=bool)
        is_sample[samples] = True
        others = reps[~is_sample[reps]]
        owner = sidx.nearest(others)
        # bucket b holds sample b followed by its cities in insertion order
        keys = np.concatenate((rank[skeleton] * 2, rank[owner] * 2 + 1))
        seq = np.concatenate((skeleton, others))
        unit_order = seq[np.argsort(keys, kind="stable")]
    if paths is None:
        order = unit_order.astype(np.int64)
    else:
        by_rep = {int(p[0]): p for p in paths}
        order = np.concatenate([by_rep[int(r)] for r in unit_order])
    pos = np.empty_like(order)
    pos[order] = np.arange(order.size)
    k = max(1, min(icfg.neighbors, n - 1))
    if n >= 4:
        neigh = GridIndex(xs, ys, np.arange(n)).knn_table(np.arange(n), k)
        anchors = skeleton if skeleton is not None else order[:1].copy()
        K.window_sweep(order, pos, xs, ys, inst.metric_code, fn,
                       neigh, anchors, int(icfg.window_subpaths))
    order = perm[order]
    pos = np.empty_like(order)
    pos[order] = np.arange(order.size)
    cost = int(edge_costs_along(inst, order).sum())
    return Tour(order, pos, cost)
