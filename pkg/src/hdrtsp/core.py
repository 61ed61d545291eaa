"""Instance and tour representations, integer distance semantics, validation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import ContractViolation, ValidationError

EUC_2D = "EUC_2D"
CEIL_2D = "CEIL_2D"
METRICS = {EUC_2D: 0, CEIL_2D: 1}


class Edge(NamedTuple):
    """Undirected edge stored canonically with ``u < v``."""

    u: int
    v: int

    @classmethod
    def of(cls, a: int, b: int) -> "Edge":
        a, b = int(a), int(b)
        if a == b:
            raise ContractViolation(f"degenerate edge ({a}, {a})")
        return cls(a, b) if a < b else cls(b, a)


def geometric_cost(xs, ys, metric_code: int, u, v):
    """Vectorised TSPLIB distance between vertex arrays ``u`` and ``v``."""
    dx = xs[u] - xs[v]
    dy = ys[u] - ys[v]
    d = np.sqrt(dx * dx + dy * dy)
    if metric_code == 0:
        return np.floor(d + 0.5).astype(np.int64)
    return np.ceil(d).astype(np.int64)


class Instance:
    """Euclidean TSP instance with optional forced (permanently fixed) edges.

    Forced edges carry explicit integer costs that override the geometric
    distance; this is how compressed segments keep their true length.
    The object is treated as immutable once built.
    """

    def __init__(
        self,
        coords,
        metric: str = EUC_2D,
        forced_edges: Iterable[tuple[int, int, int]] = (),
        level: int = 0,
        name: str = "",
    ):
        coords = np.array(coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ContractViolation("coords must have shape (n, 2)")
        n = coords.shape[0]
        if n < 3:
            raise ContractViolation(f"instance needs at least 3 vertices, got {n}")
        if metric not in METRICS:
            raise ContractViolation(f"unknown metric {metric!r}")
        self.n = n
        self.coords = coords
        self.xs = np.ascontiguousarray(coords[:, 0])
        self.ys = np.ascontiguousarray(coords[:, 1])
        self.metric = metric
        self.metric_code = METRICS[metric]
        self.level = int(level)
        self.name = name

        self.forced: dict[Edge, int] = {}
        self.forced_nbr = np.full((n, 2), -1, dtype=np.int64)
        self.forced_cost = np.zeros((n, 2), dtype=np.int64)
        for u, v, c in forced_edges:
            self._add_forced(int(u), int(v), c)
        self._check_forced_paths()

    def _add_forced(self, u: int, v: int, cost) -> None:
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ContractViolation(f"forced edge ({u}, {v}) out of range")
        if int(cost) != cost or cost < 0:
            raise ContractViolation(f"forced edge cost must be a nonnegative integer, got {cost}")
        e = Edge.of(u, v)
        if e in self.forced:
            raise ContractViolation(f"duplicate forced edge {e}")
        for a, b in ((u, v), (v, u)):
            slot = 0 if self.forced_nbr[a, 0] < 0 else 1
            if self.forced_nbr[a, slot] >= 0:
                raise ContractViolation(f"vertex {a} has more than two forced edges")
            self.forced_nbr[a, slot] = b
            self.forced_cost[a, slot] = int(cost)
        self.forced[e] = int(cost)

    def _check_forced_paths(self) -> None:
        # every forced component must be a path (a single Hamiltonian cycle is tolerated)
        seen = np.zeros(self.n, dtype=bool)
        for s in range(self.n):
            if seen[s] or self.forced_nbr[s, 0] < 0:
                continue
            size, edges = 0, 0
            stack = [s]
            seen[s] = True
            while stack:
                a = stack.pop()
                size += 1
                for b in self.forced_nbr[a]:
                    if b >= 0:
                        edges += 1
                        if not seen[b]:
                            seen[b] = True
                            stack.append(int(b))
            edges //= 2
            if edges >= size and size < self.n:
                raise ContractViolation("forced edges contain a cycle shorter than n")

    @property
    def num_forced(self) -> int:
        return len(self.forced)

    def forced_array(self) -> np.ndarray:
        """Forced edges as an ``(r, 3)`` int array of ``(u, v, cost)`` rows."""
        if not self.forced:
            return np.zeros((0, 3), dtype=np.int64)
        return np.array([(e.u, e.v, c) for e, c in sorted(self.forced.items())], dtype=np.int64)

    def is_forced(self, u: int, v: int) -> bool:
        return self.forced_nbr[u, 0] == v or self.forced_nbr[u, 1] == v

    def costs(self, u, v) -> np.ndarray:
        """Edge costs for vertex arrays, honouring forced-edge overrides."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        c = geometric_cost(self.xs, self.ys, self.metric_code, u, v)
        if self.forced:
            for slot in (0, 1):
                hit = self.forced_nbr[u, slot] == v
                if hit.any():
                    c = np.where(hit, self.forced_cost[u, slot], c)
        return c

    def __repr__(self) -> str:
        return (f"Instance(name={self.name!r}, n={self.n}, metric={self.metric}, "
                f"forced={self.num_forced}, level={self.level})")


def edge_cost(inst: Instance, u: int, v: int) -> int:
    """Integer cost of edge ``(u, v)``; forced edges return their stored cost."""
    u, v = int(u), int(v)
    if not (0 <= u < inst.n and 0 <= v < inst.n):
        raise ContractViolation(f"vertex out of range: ({u}, {v}) with n={inst.n}")
    if u == v:
        raise ContractViolation(f"edge_cost called with u == v == {u}")
    for slot in (0, 1):
        if inst.forced_nbr[u, slot] == v:
            return int(inst.forced_cost[u, slot])
    return int(geometric_cost(inst.xs, inst.ys, inst.metric_code, u, v))


def _is_permutation(order: np.ndarray, n: int) -> bool:
    if order.shape != (n,):
        return False
    if order.size and (order.min() < 0 or order.max() >= n):
        return False
    return np.bincount(order, minlength=n).max(initial=0) == 1


def edge_costs_along(inst: Instance, order: np.ndarray) -> np.ndarray:
    """Cost of the edge leaving each tour position (cyclically)."""
    return inst.costs(order, np.roll(order, -1))


def tour_cost(inst: Instance, t) -> int:
    """Total cycle length of ``t`` (a Tour or a raw order array)."""
    order = np.asarray(t.order if isinstance(t, Tour) else t, dtype=np.int64)
    if not _is_permutation(order, inst.n):
        raise ValidationError("tour order is not a permutation of range(n)")
    return int(edge_costs_along(inst, order).sum())


@dataclass
class Tour:
    """Hamiltonian cycle as an order array plus its inverse permutation."""

    order: np.ndarray
    pos: np.ndarray
    cost: int

    @classmethod
    def from_order(cls, inst: Instance, order) -> "Tour":
        order = np.array(order, dtype=np.int64)
        cost = tour_cost(inst, order)
        pos = np.empty_like(order)
        pos[order] = np.arange(order.size, dtype=np.int64)
        return cls(order, pos, cost)

    @property
    def n(self) -> int:
        return self.order.size

    def succ(self, v: int) -> int:
        return int(self.order[(self.pos[v] + 1) % self.n])

    def pred(self, v: int) -> int:
        return int(self.order[self.pos[v] - 1])

    def edges(self) -> np.ndarray:
        """Canonical ``(n, 2)`` array of the cycle's undirected edges."""
        a = self.order
        b = np.roll(self.order, -1)
        return np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1)

    def has_edge(self, u: int, v: int) -> bool:
        return self.succ(u) == v or self.pred(u) == v

    def copy(self) -> "Tour":
        return Tour(self.order.copy(), self.pos.copy(), self.cost)

    def same_cycle(self, other: "Tour") -> bool:
        """True when both tours traverse the same undirected cycle."""
        if self.n != other.n:
            return False
        ea = self.edges()
        eb = other.edges()
        ka = np.sort(ea[:, 0] * self.n + ea[:, 1])
        kb = np.sort(eb[:, 0] * self.n + eb[:, 1])
        return bool(np.array_equal(ka, kb))


PERMUTATION = "permutation"
POSITION = "position"
COST = "cost"
FORCED_EDGE = "forced-edge"


@dataclass
class ValidationReport:
    flags: set[str] = field(default_factory=set)
    details: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.flags

    def __bool__(self) -> bool:
        return self.ok

    def flag(self, kind: str, msg: str) -> None:
        self.flags.add(kind)
        self.details.append(f"{kind}: {msg}")

    def __str__(self) -> str:
        return "feasible" if self.ok else "\n".join(self.details)


def validate_tour(inst: Instance, t: Tour) -> ValidationReport:
    """Check permutation, pos/order consistency, stored cost and forced edges."""
    rep = ValidationReport()
    order = np.asarray(t.order, dtype=np.int64)
    if not _is_permutation(order, inst.n):
        rep.flag(PERMUTATION, "order is not a permutation of range(n)")
        return rep
    pos = np.asarray(t.pos)
    if pos.shape != order.shape or not np.array_equal(pos[order], np.arange(inst.n)):
        rep.flag(POSITION, "pos is not the inverse of order")
    actual = int(edge_costs_along(inst, order).sum())
    if actual != t.cost:
        rep.flag(COST, f"stored cost {t.cost} != recomputed {actual}")
    if inst.forced:
        inv = np.empty_like(order)
        inv[order] = np.arange(inst.n)
        missing = []
        for e in inst.forced:
            d = abs(int(inv[e.u]) - int(inv[e.v]))
            if d != 1 and d != inst.n - 1:
                missing.append(e)
        if missing:
            rep.flag(FORCED_EDGE, f"{len(missing)} forced edge(s) absent, e.g. {tuple(missing[0])}")
    return rep
