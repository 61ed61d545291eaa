import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdrtsp.core import Instance, Tour, validate_tour
from hdrtsp.destroy import build_subproblem, select_edges_to_delete
from hdrtsp.errors import ContractViolation, SizeLimitError
from hdrtsp.repair import (ENGINES, expand_solution, held_karp_forced, held_karp_tour,
                           register_engine, solve_subproblem)
from hdrtsp.spatial import build_index


def random_sub(rng, max_sub=12):
    n = int(rng.integers(8, 60))
    inst = Instance(rng.integers(0, 1000, (n, 2)))
    t = Tour.from_order(inst, rng.permutation(n))
    r = int(rng.integers(2, max_sub // 2 + 1))
    pos = np.sort(rng.choice(n, size=r, replace=False))
    a, b = t.order[pos], t.order[(pos + 1) % n]
    sub = build_subproblem(inst, t, np.stack([np.minimum(a, b), np.maximum(a, b)], 1))
    return inst, t, sub


def brute_tour(inst):
    n = inst.n
    best = None
    for p in itertools.permutations(range(1, n)):
        t = Tour.from_order(inst, (0,) + p)
        if all(t.has_edge(e.u, e.v) for e in inst.forced) and (best is None or t.cost < best):
            best = t.cost
    return best


def test_triangle_sub():
    inst = Instance([(0, 0), (3, 0), (0, 4)])
    t = Tour.from_order(inst, [0, 1, 2])
    sub = build_subproblem(inst, t, t.edges())
    out = solve_subproblem(sub, rng=np.random.default_rng(0))
    assert sub.tour_cost(out) == 12


def test_held_karp_square():
    inst = Instance([(0, 0), (0, 10), (10, 10), (10, 0)])
    assert held_karp_tour(inst).cost == 40
    diag = Instance(inst.coords, forced_edges=[(0, 2, 14)])
    t = held_karp_tour(diag)
    assert t.has_edge(0, 2)
    assert t.cost == brute_tour(diag)


def test_held_karp_limit():
    inst = Instance(np.random.default_rng(0).uniform(0, 1, (17, 2)))
    with pytest.raises(SizeLimitError):
        held_karp_tour(inst)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_held_karp_matches_brute(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 8))
    order = rng.permutation(n)
    forced = [(order[0], order[1], int(rng.integers(0, 2000)))] if n > 3 and seed % 2 else []
    inst = Instance(rng.integers(0, 1000, (n, 2)), forced_edges=forced)
    t = held_karp_tour(inst)
    assert validate_tour(inst, t).ok
    assert t.cost == brute_tour(inst)


def test_warm_start_optimal_unchanged(rng):
    for _ in range(20):
        inst, t, sub = random_sub(rng, 10)
        opt = held_karp_forced(sub)
        out = solve_subproblem(sub, rng=rng, warm_start=opt)
        assert sub.tour_cost(out) == sub.tour_cost(opt)


def test_bad_warm_start(rng):
    while True:
        inst, t, sub = random_sub(rng, 12)
        if sub.temp_fixed.shape[0] and sub.sub_n >= 5:
            break
    a, b = sub.temp_fixed[0, :2]
    w = [v for v in range(sub.sub_n) if v not in (a, b)]
    bad = np.array([a] + w + [b])
    bad[[1, len(bad) - 1]] = bad[[len(bad) - 1, 1]]
    if sub.contains_fixed(bad):
        pytest.skip("swap happened to keep the edge")
    with pytest.raises(ContractViolation):
        solve_subproblem(sub, warm_start=bad)


def test_budget_contract(rng):
    _, _, sub = random_sub(rng)
    with pytest.raises(ContractViolation):
        solve_subproblem(sub, budget=0)


def test_deterministic(rng):
    inst = Instance(rng.uniform(0, 1000, (400, 2)))
    t = Tour.from_order(inst, rng.permutation(400))
    sub = build_subproblem(inst, t, select_edges_to_delete(inst, t, 0, 60, build_index(inst)))
    a = solve_subproblem(sub, rng=7)
    b = solve_subproblem(sub, rng=7)
    assert np.array_equal(a, b)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31))
def test_expand_identity_and_delta(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 300))
    order = rng.permutation(n)
    forced = [(order[i], order[i + 1], int(rng.integers(0, 3000))) for i in range(0, n - 2, 9)]
    inst = Instance(rng.integers(0, 1000, (n, 2)), forced_edges=forced)
    t = Tour.from_order(inst, order)
    m = int(rng.integers(2, 40))
    sub = build_subproblem(inst, t, select_edges_to_delete(inst, t, int(rng.integers(n)), m,
                                                           build_index(inst)))
    out = solve_subproblem(sub, rng=rng)
    assert sub.contains_fixed(out)
    new = expand_solution(sub, out, t)
    assert validate_tour(inst, new).ok
    delta = sub.tour_cost(sub.warm_start()) - sub.tour_cost(out)
    assert delta >= 0
    assert new.cost == t.cost - delta


def test_expand_rejects_missing_fixed(rng):
    while True:
        inst, t, sub = random_sub(rng, 12)
        if sub.temp_fixed.shape[0] and sub.sub_n >= 5:
            break
    a, b = sub.temp_fixed[0, :2]
    rest = [v for v in range(sub.sub_n) if v not in (a, b)]
    bad = np.array([a] + rest[:1] + [b] + rest[1:])
    with pytest.raises(ContractViolation):
        expand_solution(sub, bad, t)


def test_engine_registry():
    def lazy(xs, ys, metric, fn, warm, budget, seed):
        return warm.copy()
    register_engine("noop", lazy)
    try:
        rng = np.random.default_rng(1)
        _, _, sub = random_sub(rng)
        assert np.array_equal(solve_subproblem(sub, engine="noop"), sub.warm_start())
    finally:
        ENGINES.pop("noop")
