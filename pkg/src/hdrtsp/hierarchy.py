"""Full solver: destroy-repair local optimisation, common-edge fixing,
compression and recursion over levels."""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .core import Edge, Instance, Tour
from .destroy import (SelectionCounters, build_subproblem, pick_center,
                      select_edge_positions, update_counters)
from .errors import ContractViolation, DestroyInfeasible
from .init import InitConfig, build_initial_tour
from .repair import (ENGINES, HELD_KARP_LIMIT, expand_solution, held_karp_tour,
                     improve_tour, solve_subproblem)
from .spatial import GridIndex

Observer = Callable[[str, dict], None]


@dataclass
class RepairConfig:
    engine: str = "ils"
    budget_factor: int = 40
    # whole-level solve when a level gets small (move evaluations per vertex)
    direct_budget_factor: int = 4000


@dataclass
class SolverConfig:
    m: int = 500
    k: int = 10
    l_divisor: float = 90
    direct_solve_threshold: int = 500
    deadline: float | None = None
    seed: int = 1
    hierarchy_enabled: bool = True
    threads: int = 1
    max_passes: int = 1
    repair: RepairConfig = field(default_factory=RepairConfig)
    init: InitConfig = field(default_factory=InitConfig)

    def validate(self) -> "SolverConfig":
        if self.m < 2:
            raise ContractViolation("m must be >= 2")
        if self.k < 1:
            raise ContractViolation("k must be >= 1")
        if self.l_divisor < 1:
            raise ContractViolation("l_divisor must be >= 1")
        if self.direct_solve_threshold < 4:
            raise ContractViolation("direct_solve_threshold must be >= 4")
        if self.deadline is not None and self.deadline < 0:
            raise ContractViolation("deadline must be >= 0")
        if self.threads < 1:
            raise ContractViolation("threads must be >= 1")
        if self.max_passes < 0:
            raise ContractViolation("max_passes must be >= 0")
        if self.repair.budget_factor < 1 or self.repair.direct_budget_factor < 1:
            raise ContractViolation("repair budgets must be >= 1")
        if self.repair.engine not in ENGINES:
            raise ContractViolation(f"unknown repair engine {self.repair.engine!r}")
        return self


def rounds_for(n: int, cfg: SolverConfig) -> int:
    return max(1, math.ceil(n / cfg.l_divisor))


def run_rng(seed: int, pass_no: int, level: int, run: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**63 - 1), pass_no, level, run]))


# ---------------------------------------------------------------- local opt

@dataclass
class LocalOptResult:
    tour: Tour
    rounds: int = 0
    improvements: int = 0
    saturated: bool = False
    timed_out: bool = False


def local_opt(inst: Instance, start: Tour, l: int, cfg: SolverConfig, rng,
              idx: GridIndex | None = None, deadline_at: float | None = None,
              observer: Observer | None = None) -> LocalOptResult:
    """``l`` destroy-repair rounds with strictly-better acceptance."""
    idx = idx if idx is not None else GridIndex(inst.xs, inst.ys, np.arange(inst.n))
    t = start
    res = LocalOptResult(t)
    counters = SelectionCounters(inst.n)
    ecost = None
    for _ in range(int(l)):
        if deadline_at is not None and time.monotonic() >= deadline_at:
            res.timed_out = True
            break
        center = pick_center(counters, rng)
        try:
            positions = select_edge_positions(inst, t, center, cfg.m, idx)
        except DestroyInfeasible:
            res.saturated = True
            break
        if ecost is None:
            ecost = inst.costs(t.order, np.roll(t.order, -1))
        sub = build_subproblem(inst, t, positions, ecost)
        update_counters(counters, sub)
        if observer is not None:
            observer("subproblem", {"instance": inst, "sub": sub, "m": cfg.m})
        res.rounds += 1
        if sub.sub_n <= 3:
            continue
        out = solve_subproblem(sub, rng=rng, engine=cfg.repair.engine,
                               budget_factor=cfg.repair.budget_factor)
        if sub.tour_cost(out) < sub.tour_cost(sub.warm_start()):
            t = expand_solution(sub, out, t)
            ecost = None
            res.improvements += 1
            if observer is not None:
                observer("accept", {"instance": inst, "tour": t})
    res.tour = t
    return res


def run_local_opt(inst: Instance, start: Tour, l: int, cfg: SolverConfig, rng,
                  idx: GridIndex | None = None) -> Tour:
    return local_opt(inst, start, l, cfg, rng, idx).tour


# ---------------------------------------------------------------- fixing

def fix_common_edges(solutions, forced=None) -> np.ndarray:
    """Canonical ``(r, 2)`` edges shared by every tour, sorted.

    If all tours coincide, the largest edge that is not in ``forced`` is
    left out so the fixed set never closes a cycle.
    """
    tours = list(solutions)
    if not tours:
        raise ContractViolation("need at least one tour")
    n = tours[0].n
    if any(t.n != n for t in tours):
        raise ContractViolation("tours cover different instances")
    ref = tours[0]
    a = ref.order
    b = np.roll(ref.order, -1)
    keep = np.ones(n, dtype=bool)
    for t in tours[1:]:
        pa = t.pos[a]
        keep &= (t.order[(pa + 1) % n] == b) | (t.order[(pa - 1) % n] == b)
    u = np.minimum(a, b)[keep]
    v = np.maximum(a, b)[keep]
    edges = np.stack([u, v], axis=1)
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    if edges.shape[0] == n:
        drop = edges.shape[0] - 1
        if forced:
            while drop >= 0 and Edge(int(edges[drop, 0]), int(edges[drop, 1])) in forced:
                drop -= 1
            if drop < 0:
                raise ContractViolation("forced edges already close a full cycle")
        edges = np.delete(edges, drop, axis=0)
    return edges.reshape(-1, 2).astype(np.int64)


# ---------------------------------------------------------------- compression

@dataclass
class CompressionMap:
    """How a child instance's vertices and forced edges unfold in the parent."""

    parent_n: int
    to_parent: np.ndarray                         # child vertex -> parent vertex
    paths: dict = field(default_factory=dict)     # Edge(child) -> parent path, child u first

    @property
    def child_n(self) -> int:
        return int(self.to_parent.size)

    @classmethod
    def identity(cls, n: int) -> "CompressionMap":
        return cls(n, np.arange(n, dtype=np.int64), {})


def _fixed_runs(rep: Tour, fixed: np.ndarray):
    """Maximal runs of fixed edges along ``rep`` as (first position, edge count)."""
    n = rep.n
    on = np.zeros(n, dtype=bool)
    if fixed.size:
        pu = rep.pos[fixed[:, 0]]
        fwd = rep.order[(pu + 1) % n] == fixed[:, 1]
        bwd = rep.order[(pu - 1) % n] == fixed[:, 1]
        if not np.all(fwd | bwd):
            raise ContractViolation("fixed edge is not in the representative tour")
        on[np.where(fwd, pu, (pu - 1) % n)] = True
    if on.all():
        raise ContractViolation("fixed edges close a cycle")
    # rotate so position 0 follows a free edge, then find runs
    shift = int(np.flatnonzero(~on)[-1]) + 1
    rolled = np.roll(on, -shift)
    d = np.diff(np.concatenate(([0], rolled.astype(np.int8), [0])))
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return (starts + shift) % n, ends - starts


def compressed_size(rep: Tour, fixed) -> int:
    fixed = np.asarray(fixed, dtype=np.int64).reshape(-1, 2)
    if fixed.shape[0] == 0:
        return rep.n
    _, lens = _fixed_runs(rep, fixed)
    return rep.n - int((lens - 1).sum())


def compress_instance(inst: Instance, fixed, representative: Tour):
    """Collapse each maximal fixed path into one forced edge.

    Returns ``(child, map)``. The child keeps the path end vertices, numbered
    by their rank among surviving parent vertices; its forced edge costs are
    the parent path costs.
    """
    fixed = np.asarray(fixed, dtype=np.int64).reshape(-1, 2)
    rep = representative
    if fixed.shape[0] == 0:
        return inst, CompressionMap.identity(inst.n)
    if rep.n != inst.n:
        raise ContractViolation("representative tour does not match the instance")
    deg = np.bincount(fixed.ravel(), minlength=inst.n)
    if deg.max() > 2:
        raise ContractViolation("fixed edges do not form paths")
    if inst.forced:
        have = set(map(tuple, fixed.tolist()))
        if any((e.u, e.v) not in have for e in inst.forced):
            raise ContractViolation("fixed set misses a forced edge")
    starts, lens = _fixed_runs(rep, fixed)
    n = inst.n
    interior = np.zeros(n, dtype=bool)
    ecost = inst.costs(rep.order, np.roll(rep.order, -1))
    csum = np.concatenate(([0], np.cumsum(ecost)))
    runs = []
    for s, ln in zip(starts.tolist(), lens.tolist()):
        idx = (s + np.arange(ln + 1)) % n
        path = rep.order[idx]
        interior[path[1:-1]] = True
        e = s + ln
        c = csum[e] - csum[s] if e <= n else csum[n] - csum[s] + csum[e - n]
        runs.append((path, int(c)))
    survivors = np.flatnonzero(~interior)
    if survivors.size < 3:
        raise ContractViolation("compression would leave fewer than 3 vertices")
    child_id = np.full(n, -1, dtype=np.int64)
    child_id[survivors] = np.arange(survivors.size)
    forced = []
    paths = {}
    for path, c in runs:
        a, b = int(child_id[path[0]]), int(child_id[path[-1]])
        e = Edge.of(a, b)
        forced.append((a, b, c))
        paths[e] = path if a < b else path[::-1]
    child = Instance(inst.coords[survivors], inst.metric, forced, level=inst.level + 1,
                     name=inst.name)
    return child, CompressionMap(n, survivors.astype(np.int64), paths)


def image_tour(child: Instance, cmap: CompressionMap, parent_tour: Tour) -> Tour:
    """The child tour obtained by dropping compressed interiors from ``parent_tour``."""
    child_id = np.full(cmap.parent_n, -1, dtype=np.int64)
    child_id[cmap.to_parent] = np.arange(cmap.child_n)
    order = child_id[parent_tour.order]
    order = order[order >= 0]
    pos = np.empty_like(order)
    pos[order] = np.arange(order.size)
    return Tour(order, pos, parent_tour.cost)


def expand_to_parent(child_tour: Tour, cmap: CompressionMap) -> Tour:
    """Replace each child forced edge by its parent path; cost is unchanged."""
    co = child_tour.order
    if co.size != cmap.child_n:
        raise ContractViolation("child tour does not match the compression map")
    if not cmap.paths:
        order = cmap.to_parent[co]
    else:
        cn = co.size
        nxt = np.roll(co, -1)
        pieces = []
        for i in range(cn):
            a, b = int(co[i]), int(nxt[i])
            path = cmap.paths.get(Edge.of(a, b))
            pieces.append(cmap.to_parent[a:a + 1])
            if path is not None and path.size > 2:
                pieces.append(path[1:-1] if a < b else path[-2:0:-1])
        order = np.concatenate(pieces)
        # every child forced edge must be traversed
        pos_c = np.empty(cn, dtype=np.int64)
        pos_c[co] = np.arange(cn)
        for e in cmap.paths:
            d = abs(int(pos_c[e.u]) - int(pos_c[e.v]))
            if d != 1 and d != cn - 1:
                raise ContractViolation("child tour is missing a forced edge")
    if order.size != cmap.parent_n:
        raise ContractViolation("expanded tour has the wrong length")
    pos = np.empty_like(order)
    pos[order] = np.arange(order.size)
    return Tour(order, pos, child_tour.cost)


# ---------------------------------------------------------------- stats

@dataclass
class LevelStats:
    pass_no: int
    level: int
    n: int
    rounds: int = 0
    improvements: int = 0
    fixed_edges: int = 0
    best_cost: int = 0
    elapsed: float = 0.0
    direct: bool = False


@dataclass
class RunStats:
    seed: int = 0
    levels: list = field(default_factory=list)
    trajectory: list = field(default_factory=list)   # (seconds, best cost)
    total_rounds: int = 0
    improvements: int = 0
    passes: int = 0
    timed_out: bool = False
    saturated: bool = False
    init_cost: int = 0
    best_cost: int = 0
    elapsed: float = 0.0

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    def record(self, t0: float, cost: int) -> None:
        if not self.trajectory or cost < self.trajectory[-1][1]:
            self.trajectory.append((time.monotonic() - t0, int(cost)))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["num_levels"] = self.num_levels
        return d


# ---------------------------------------------------------------- driver

class _Clock:
    def __init__(self, deadline):
        self.t0 = time.monotonic()
        self.at = None if deadline is None else self.t0 + float(deadline)

    def expired(self) -> bool:
        return self.at is not None and time.monotonic() >= self.at


def _k_runs(inst, start, l, cfg, rngs, idx, clock, observer):
    def one(r):
        return local_opt(inst, start, l, cfg, rngs[r], idx, clock.at, observer)
    if cfg.threads > 1 and len(rngs) > 1:
        with ThreadPoolExecutor(max_workers=min(cfg.threads, len(rngs))) as ex:
            return list(ex.map(one, range(len(rngs))))
    return [one(r) for r in range(len(rngs))]


def _direct(inst: Instance, t: Tour, cfg: SolverConfig, rng) -> Tour:
    if inst.n <= HELD_KARP_LIMIT:
        best = held_karp_tour(inst)
        return best if best.cost < t.cost else t
    return improve_tour(inst, t, cfg.repair.direct_budget_factor * inst.n, rng, cfg.repair.engine)


def _hierarchy_pass(inst, start, cfg, pass_no, stats, clock, observer):
    """One descent through the levels; returns the best level-0 tour."""
    maps = []
    cur_inst, cur = inst, start
    level = 0
    while True:
        ls = LevelStats(pass_no, level, cur_inst.n, best_cost=cur.cost)
        stats.levels.append(ls)
        t_level = time.monotonic()
        if clock.expired():
            stats.timed_out = True
            break
        if level > 0 and cur_inst.n < cfg.direct_solve_threshold:
            cur = _direct(cur_inst, cur, cfg, run_rng(cfg.seed, pass_no, level, cfg.k))
            ls.direct, ls.rounds = True, 1
            stats.total_rounds += 1
            ls.best_cost = cur.cost
            stats.record(clock.t0, cur.cost)
            ls.elapsed = time.monotonic() - t_level
            break
        idx = GridIndex(cur_inst.xs, cur_inst.ys, np.arange(cur_inst.n))
        rngs = [run_rng(cfg.seed, pass_no, level, r) for r in range(cfg.k)]
        results = _k_runs(cur_inst, cur, rounds_for(cur_inst.n, cfg), cfg, rngs, idx,
                          clock, observer)
        for res in results:
            ls.rounds += res.rounds
            ls.improvements += res.improvements
        stats.total_rounds += ls.rounds
        stats.improvements += ls.improvements
        tours = [res.tour for res in results]
        best = min(tours, key=lambda t: t.cost)      # first on ties: run-index order
        if best.cost < cur.cost:
            cur = best
            stats.record(clock.t0, cur.cost)
        ls.best_cost = cur.cost
        ls.elapsed = time.monotonic() - t_level
        if any(res.timed_out for res in results) or clock.expired():
            stats.timed_out = True
            break
        if any(res.saturated for res in results):
            stats.saturated = True
            break
        fixed = fix_common_edges(tours, cur_inst.forced)
        ls.fixed_edges = int(fixed.shape[0])
        child_n = compressed_size(cur, fixed)
        if child_n < 3:
            # one fixed path covers everything: the tour is determined
            break
        if child_n == cur_inst.n and fixed.shape[0] == cur_inst.num_forced:
            # nothing new agreed on; finish this level directly
            cur = _direct(cur_inst, cur, cfg, run_rng(cfg.seed, pass_no, level, cfg.k))
            ls.direct = True
            ls.best_cost = cur.cost
            stats.record(clock.t0, cur.cost)
            break
        child, cmap = compress_instance(cur_inst, fixed, cur)
        child_start = image_tour(child, cmap, cur)
        if observer is not None:
            observer("compress", {"parent": cur_inst, "child": child, "map": cmap,
                                  "parent_tour": cur, "child_tour": child_start,
                                  "fixed": fixed})
        maps.append(cmap)
        cur_inst, cur = child, child_start
        level += 1
    for cmap in reversed(maps):
        cur = expand_to_parent(cur, cmap)
    return cur


def _flat_pass(inst, start, cfg, pass_no, stats, clock, observer):
    """HDR-V1: k runs per iteration from the incumbent, nothing is fixed."""
    ls = LevelStats(pass_no, 0, inst.n, best_cost=start.cost)
    stats.levels.append(ls)
    t_level = time.monotonic()
    idx = GridIndex(inst.xs, inst.ys, np.arange(inst.n))
    rngs = [run_rng(cfg.seed, pass_no, 0, r) for r in range(cfg.k)]
    results = _k_runs(inst, start, rounds_for(inst.n, cfg), cfg, rngs, idx, clock, observer)
    cur = start
    for res in results:
        ls.rounds += res.rounds
        ls.improvements += res.improvements
        if res.tour.cost < cur.cost:
            cur = res.tour
    stats.total_rounds += ls.rounds
    stats.improvements += ls.improvements
    if cur.cost < start.cost:
        stats.record(clock.t0, cur.cost)
    ls.best_cost = cur.cost
    ls.elapsed = time.monotonic() - t_level
    if any(r.timed_out for r in results) or clock.expired():
        stats.timed_out = True
    if any(r.saturated for r in results):
        stats.saturated = True
    return cur


def hdr_solve(inst: Instance, cfg: SolverConfig | None = None,
              observer: Observer | None = None, initial: Tour | None = None):
    """Solve ``inst``; returns ``(best tour, RunStats)``.

    ``cfg.max_passes`` bounds how many times the whole descent is repeated
    from the current best tour (0 = until the deadline, or until a pass
    brings no improvement when there is no deadline).
    """
    cfg = (cfg or SolverConfig()).validate()
    clock = _Clock(cfg.deadline)
    stats = RunStats(seed=cfg.seed)
    if initial is None:
        best = build_initial_tour(inst, cfg, np.random.default_rng(
            np.random.SeedSequence([int(cfg.seed) & (2**63 - 1), 2**31])))
    else:
        best = initial
    stats.init_cost = best.cost
    stats.record(clock.t0, best.cost)
    if observer is not None:
        observer("accept", {"instance": inst, "tour": best})
    step = _hierarchy_pass if cfg.hierarchy_enabled else _flat_pass
    pass_no = 0
    while not clock.expired():
        if cfg.max_passes and pass_no >= cfg.max_passes:
            break
        before = best.cost
        out = step(inst, best, cfg, pass_no, stats, clock, observer)
        pass_no += 1
        if out.cost < best.cost:
            best = out
            if observer is not None:
                observer("accept", {"instance": inst, "tour": best})
        if stats.saturated:
            break
        if best.cost >= before and cfg.deadline is None:
            break
    if clock.expired():
        stats.timed_out = True
    stats.passes = pass_no
    stats.best_cost = best.cost
    stats.elapsed = time.monotonic() - clock.t0
    return best, stats
