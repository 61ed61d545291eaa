import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdrtsp.core import Instance, Tour
from hdrtsp.destroy import (SelectionCounters, build_subproblem, pick_center,
                            select_edges_to_delete, update_counters)
from hdrtsp.errors import ContractViolation, DestroyInfeasible
from hdrtsp.repair import expand_solution
from hdrtsp.spatial import build_index


def ring(n, r=100.0):
    a = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return Instance(np.c_[r * np.cos(a), r * np.sin(a)])


def brute_edges(inst, t, center, m):
    """Rank every non-forced tour edge by its nearer endpoint (knn tie rules)."""
    d2 = (inst.xs - inst.xs[center]) ** 2 + (inst.ys - inst.ys[center]) ** 2
    d2[center] = -1.0
    rank = np.empty(inst.n, dtype=np.int64)
    rank[np.lexsort((np.arange(inst.n), d2))] = np.arange(inst.n)
    out, seen = [], set()
    for v in np.argsort(rank):
        p = t.pos[v]
        cand = [(v, t.order[(p - 1) % t.n]), (v, t.order[(p + 1) % t.n])]
        cand = sorted({(min(a, b), max(a, b)) for a, b in cand})
        for e in cand:
            if e not in seen and not inst.is_forced(*e):
                seen.add(e)
                out.append(e)
        if len(out) >= m:
            break
    return np.array(out[:m])


def test_pick_center_ties():
    c = SelectionCounters(4)
    c.count[:] = [0, 1, 0, 2]
    rng = np.random.default_rng(0)
    draws = np.array([pick_center(c, rng) for _ in range(10000)])
    assert set(np.unique(draws)) == {0, 2}
    k0 = (draws == 0).sum()
    chi2 = (k0 - 5000) ** 2 / 5000 * 2
    assert chi2 < 10.83          # p = 0.001, one degree of freedom


def test_pick_center_excludes_incremented():
    c = SelectionCounters(3)
    c.count[:] = 5
    c.count[1] += 1
    rng = np.random.default_rng(1)
    assert {pick_center(c, rng) for _ in range(100)} == {0, 2}


def test_all_edges_when_m_large():
    inst = ring(6)
    t = Tour.from_order(inst, range(6))
    e = select_edges_to_delete(inst, t, 0, 12, build_index(inst))
    assert len(e) == 6


def test_m2_returns_center_edges():
    inst = ring(10)
    t = Tour.from_order(inst, range(10))
    e = select_edges_to_delete(inst, t, 4, 2, build_index(inst))
    assert sorted(map(tuple, e.tolist())) == [(3, 4), (4, 5)]


def test_contract_errors():
    inst = ring(6)
    t = Tour.from_order(inst, range(6))
    with pytest.raises(ContractViolation):
        select_edges_to_delete(inst, t, 0, 1, build_index(inst))
    forced = Instance(inst.coords, forced_edges=[(i, i + 1, 1) for i in range(5)])
    tf = Tour.from_order(forced, range(6))
    with pytest.raises(DestroyInfeasible):
        select_edges_to_delete(forced, tf, 0, 4, build_index(forced))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 40), st.booleans())
def test_selection_matches_brute_force(seed, m, with_forced):
    rng = np.random.default_rng(seed)
    n = 100
    pts = rng.integers(0, 30, (n, 2))
    order = rng.permutation(n)
    forced = []
    if with_forced:
        for i in range(0, 60, 5):
            forced.append((order[i], order[i + 1], 3))
    inst = Instance(pts, forced_edges=forced)
    t = Tour.from_order(inst, order)
    center = int(rng.integers(n))
    got = select_edges_to_delete(inst, t, center, m, build_index(inst))
    assert np.array_equal(got, brute_edges(inst, t, center, m))


def test_subproblem_adjacent_pair():
    inst = ring(8)
    t = Tour.from_order(inst, range(8))
    sub = build_subproblem(inst, t, np.array([[2, 3], [3, 4]]))
    assert sub.sub_n == 3
    assert sub.temp_fixed.shape[0] == 1
    path = sub.segment_path(0)
    # the surviving segment holds the other 7 vertices joined by 6 edges
    assert list(path) in ([4, 5, 6, 7, 0, 1, 2], [2, 1, 0, 7, 6, 5, 4])
    assert sub.to_parent[sub.sub_n - 1] in (3,) or 3 in sub.to_parent


def test_subproblem_all_edges():
    inst = ring(7)
    t = Tour.from_order(inst, range(7))
    sub = build_subproblem(inst, t, t.edges())
    assert sub.sub_n == 7 and sub.temp_fixed.shape[0] == 0


def test_subproblem_spread_deletions():
    inst = ring(40)
    t = Tour.from_order(inst, range(40))
    sub = build_subproblem(inst, t, np.array([[0, 1], [10, 11], [20, 21]]))
    assert sub.sub_n == 6 and sub.temp_fixed.shape[0] == 3


def test_subproblem_rejects_non_edge():
    inst = ring(8)
    t = Tour.from_order(inst, range(8))
    with pytest.raises(ContractViolation):
        build_subproblem(inst, t, np.array([[0, 4]]))
    f = Instance(inst.coords, forced_edges=[(0, 1, 5)])
    with pytest.raises(ContractViolation):
        build_subproblem(f, Tour.from_order(f, range(8)), np.array([[0, 1]]))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 30))
def test_subproblem_properties(seed, m):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 120))
    order = rng.permutation(n)
    forced = [(order[i], order[i + 1], int(rng.integers(0, 500))) for i in range(0, n - 3, 7)]
    inst = Instance(rng.integers(0, 200, (n, 2)), forced_edges=forced)
    t = Tour.from_order(inst, order)
    deleted = select_edges_to_delete(inst, t, int(rng.integers(n)), m, build_index(inst))
    sub = build_subproblem(inst, t, deleted)
    r = len(deleted)
    assert sub.sub_n <= 2 * r <= 2 * m
    assert not any(inst.is_forced(*e) for e in deleted)
    # cost conservation
    dcost = int(inst.costs(deleted[:, 0], deleted[:, 1]).sum())
    assert t.cost == dcost + int(sub.temp_fixed[:, 2].sum())
    assert sub.deleted_cost == dcost
    # each segment path costs what its temp-fixed edge says, endpoints match
    for i, (a, b, c) in enumerate(sub.temp_fixed):
        p = sub.segment_path(i)
        assert p[0] == sub.to_parent[a] and p[-1] == sub.to_parent[b]
        assert int(inst.costs(p[:-1], p[1:]).sum()) == c
    # temp-fixed edges are vertex disjoint
    assert np.bincount(sub.temp_fixed[:, :2].ravel(), minlength=sub.sub_n).max(initial=0) <= 1
    # expansion of the inherited sub-tour is the identity
    same = expand_solution(sub, sub.warm_start(), t)
    assert same.same_cycle(t) and same.cost == t.cost


def test_update_counters():
    c = SelectionCounters(10)

    class S:
        sub_n = 2
        to_parent = np.array([3, 7])
    update_counters(c, S())
    assert c.count[3] == 1 and c.count[7] == 1 and c.count.sum() == 2
    update_counters(c, None)
    assert c.count.sum() == 2


def test_counters_spread(rng):
    inst = Instance(rng.uniform(0, 1000, (300, 2)))
    t = Tour.from_order(inst, rng.permutation(300))
    idx = build_index(inst)
    c = SelectionCounters(300)
    centers = set()
    for _ in range(100):
        v = pick_center(c, rng)
        centers.add(v)
        sub = build_subproblem(inst, t, select_edges_to_delete(inst, t, v, 4, idx))
        update_counters(c, sub)
    assert (c.count > 0).mean() >= 0.5
