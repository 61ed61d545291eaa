"""Repair operator: solve a sub-problem with its temp-fixed edges glued in,
then splice the answer back into the parent tour."""
from __future__ import annotations

from typing import Callable

import numpy as np

from . import _kernels as K
from .core import Instance, Tour, geometric_cost
from .destroy import SubProblem
from .errors import ContractViolation, InfeasibleError, SizeLimitError
from .spatial import GridIndex

HELD_KARP_LIMIT = 16

# engine(xs, ys, metric_code, fixed_nbr, warm_order, budget, seed) -> order
Engine = Callable[..., np.ndarray]
ENGINES: dict[str, Engine] = {}


def register_engine(name: str, fn: Engine) -> None:
    """Make ``fn`` selectable as a repair engine (e.g. an EAX port)."""
    ENGINES[name] = fn


def neighbor_table(xs: np.ndarray, ys: np.ndarray, k: int) -> np.ndarray:
    n = xs.size
    idx = GridIndex(xs, ys, np.arange(n))
    return idx.knn_table(np.arange(n), max(1, min(k, n - 1)))


def ils_engine(xs, ys, metric_code, fixed_nbr, warm, budget, seed,
               neighbors: int = 10, kick_window: int = 40) -> np.ndarray:
    """Reference engine: 2-opt + Or-opt iterated local search."""
    warm = np.ascontiguousarray(warm, dtype=np.int64)
    if warm.size <= 3:
        return warm.copy()
    neigh = neighbor_table(xs, ys, neighbors)
    tour, _ = K.ils(xs, ys, metric_code, fixed_nbr, neigh, warm,
                    np.int64(budget), np.int64(seed), np.int64(kick_window))
    return tour


register_engine("ils", ils_engine)


def _seed_from(rng) -> int:
    if rng is None:
        return 0
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(2**62))
    return int(rng)


def solve_subproblem(sub: SubProblem, budget: int | None = None, rng=None,
                     warm_start=None, engine: str = "ils",
                     budget_factor: int = 40) -> np.ndarray:
    """Improve the sub-tour without ever dropping a temp-fixed edge.

    ``budget`` counts move evaluations (default ``budget_factor * sub_n``).
    The result is never costlier than ``warm_start`` and is a pure function
    of ``(sub, budget, seed)``.
    """
    warm = sub.warm_start() if warm_start is None else np.asarray(warm_start, dtype=np.int64)
    if not sub.contains_fixed(warm):
        raise ContractViolation("warm start breaks a temp-fixed edge")
    if budget is None:
        budget = budget_factor * sub.sub_n
    if budget < 1:
        raise ContractViolation("budget must be >= 1")
    if engine not in ENGINES:
        raise ContractViolation(f"unknown repair engine {engine!r}")
    out = ENGINES[engine](sub.xs, sub.ys, sub.metric_code, sub.fixed_nbr, warm,
                          budget, _seed_from(rng))
    if not sub.contains_fixed(out):
        raise ContractViolation(f"engine {engine!r} dropped a temp-fixed edge")
    if sub.tour_cost(out) > sub.tour_cost(warm):
        return warm.copy()
    return out


def expand_solution(sub: SubProblem, sub_tour, parent: Tour) -> Tour:
    """Replace each temp-fixed sub-edge by its segment in the parent tour."""
    sub_tour = np.asarray(sub_tour, dtype=np.int64)
    if not sub.contains_fixed(sub_tour):
        raise ContractViolation("sub-tour is missing a temp-fixed edge")
    order = K.expand_segments(sub.parent_order, sub.seg_start, sub.seg_len,
                              sub.sub_seg, sub.sub_head, sub_tour)
    delta = sub.tour_cost(sub_tour) - sub.tour_cost(sub.warm_start())
    pos = np.empty_like(order)
    pos[order] = np.arange(order.size, dtype=np.int64)
    return Tour(order, pos, parent.cost + delta)


def improve_tour(inst: Instance, t: Tour, budget: int, rng=None,
                 engine: str = "ils") -> Tour:
    """Run the repair engine on a whole instance (forced edges glued)."""
    out = ENGINES[engine](inst.xs, inst.ys, inst.metric_code, inst.forced_nbr,
                          t.order, budget, _seed_from(rng))
    new = Tour.from_order(inst, out)
    return new if new.cost < t.cost else t


def _held_karp(cost: np.ndarray, forced: np.ndarray) -> np.ndarray:
    n = cost.shape[0]
    if n > HELD_KARP_LIMIT:
        raise SizeLimitError(f"exact solver supports at most {HELD_KARP_LIMIT} vertices, got {n}")
    if n == 3:
        return np.arange(3, dtype=np.int64)
    order = K.held_karp(np.ascontiguousarray(cost, dtype=np.int64), forced)
    p = np.empty_like(order)
    p[order] = np.arange(n)
    fi, fj = np.nonzero(np.triu(forced))
    d = np.abs(p[fi] - p[fj])
    if not np.all((d == 1) | (d == n - 1)):
        raise InfeasibleError("no Hamiltonian cycle contains all forced edges")
    return order


def held_karp_forced(sub: SubProblem) -> np.ndarray:
    """Optimal sub-tour containing every temp-fixed edge (sub_n <= 16)."""
    if sub.sub_n > HELD_KARP_LIMIT:
        raise SizeLimitError(f"exact solver supports at most {HELD_KARP_LIMIT} vertices, got {sub.sub_n}")
    forced = np.zeros((sub.sub_n, sub.sub_n), dtype=np.bool_)
    for a, b, _ in sub.temp_fixed:
        forced[a, b] = forced[b, a] = True
    return _held_karp(sub.cost_matrix(), forced)


def held_karp_tour(inst: Instance) -> Tour:
    """Optimal tour of a small instance, honouring its forced edges."""
    if inst.n > HELD_KARP_LIMIT:
        raise SizeLimitError(f"exact solver supports at most {HELD_KARP_LIMIT} vertices, got {inst.n}")
    s = np.arange(inst.n)
    u, v = np.meshgrid(s, s, indexing="ij")
    cost = geometric_cost(inst.xs, inst.ys, inst.metric_code, u, v)
    forced = np.zeros((inst.n, inst.n), dtype=np.bool_)
    for e, c in inst.forced.items():
        cost[e.u, e.v] = cost[e.v, e.u] = c
        forced[e.u, e.v] = forced[e.v, e.u] = True
    return Tour.from_order(inst, _held_karp(cost, forced))
