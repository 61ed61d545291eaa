import numpy as np
import pytest

from hdrtsp.core import Edge, Instance, Tour, validate_tour
from hdrtsp.errors import ContractViolation
from hdrtsp.hierarchy import (CompressionMap, SolverConfig, compress_instance,
                              expand_to_parent, fix_common_edges, hdr_solve, image_tour,
                              local_opt, run_local_opt)
from hdrtsp.init import build_initial_tour
from hdrtsp.io import generate_instance
from hdrtsp.repair import held_karp_tour


def two_opt(order, i, j):
    o = np.array(order)
    o[i:j + 1] = o[i:j + 1][::-1]
    return o


def test_config_validation():
    for bad in (dict(m=1), dict(k=0), dict(l_divisor=0.5), dict(direct_solve_threshold=3),
                dict(threads=0), dict(deadline=-1)):
        with pytest.raises(ContractViolation):
            SolverConfig(**bad).validate()


def test_l_zero_returns_start(rng):
    inst = Instance(rng.uniform(0, 100, (30, 2)))
    t = Tour.from_order(inst, rng.permutation(30))
    out = run_local_opt(inst, t, 0, SolverConfig(m=10), rng)
    assert out is t


def test_local_opt_keeps_optimum(rng):
    for _ in range(5):
        inst = Instance(rng.uniform(0, 100, (9, 2)))
        opt = held_karp_tour(inst)
        out = run_local_opt(inst, opt, 20, SolverConfig(m=4), rng)
        assert out.cost == opt.cost


def test_local_opt_improves():
    inst = generate_instance("uniform", 1000, seed=4)
    start = build_initial_tour(inst, rng=np.random.default_rng(0))
    worse = 0
    for s in range(100):
        out = run_local_opt(inst, start, 100, SolverConfig(m=50), np.random.default_rng(s))
        worse += out.cost >= start.cost
    assert worse <= 1


def test_local_opt_saturated():
    inst = Instance(np.random.default_rng(0).uniform(0, 9, (6, 2)),
                    forced_edges=[(i, i + 1, 1) for i in range(5)])
    t = Tour.from_order(inst, range(6))
    res = local_opt(inst, t, 5, SolverConfig(m=4), np.random.default_rng(0))
    assert res.saturated and res.tour is t


def test_fix_common_single_tour(rng):
    inst = Instance(rng.uniform(0, 10, (12, 2)))
    t = Tour.from_order(inst, rng.permutation(12))
    e = fix_common_edges([t])
    assert e.shape == (11, 2)
    all_e = t.edges()
    dropped = set(map(tuple, all_e.tolist())) - set(map(tuple, e.tolist()))
    assert dropped == {max(map(tuple, all_e.tolist()))}


def test_fix_common_full_cycle_keeps_forced():
    inst = Instance(np.random.default_rng(2).uniform(0, 10, (6, 2)), forced_edges=[(4, 5, 3)])
    t = Tour.from_order(inst, [0, 1, 2, 3, 4, 5])
    e = fix_common_edges([t, t], inst.forced)
    assert (4, 5) in set(map(tuple, e.tolist())) and e.shape[0] == 5


def test_fix_common_two_opt_pair(rng):
    inst = Instance(rng.uniform(0, 10, (20, 2)))
    a = rng.permutation(20)
    b = two_opt(a, 4, 11)
    e = fix_common_edges([Tour.from_order(inst, a), Tour.from_order(inst, b)])
    assert e.shape[0] == 18


def test_fix_common_disjoint():
    inst = Instance(np.random.default_rng(0).uniform(0, 10, (5, 2)))
    a = Tour.from_order(inst, [0, 1, 2, 3, 4])
    b = Tour.from_order(inst, [0, 2, 4, 1, 3])
    assert fix_common_edges([a, b]).shape == (0, 2)


def test_fix_common_mismatch():
    i1 = Instance(np.zeros((4, 2)) + np.arange(4)[:, None])
    i2 = Instance(np.zeros((5, 2)) + np.arange(5)[:, None])
    with pytest.raises(ContractViolation):
        fix_common_edges([Tour.from_order(i1, range(4)), Tour.from_order(i2, range(5))])


def test_compress_empty_identity(rng):
    inst = Instance(rng.uniform(0, 10, (8, 2)))
    t = Tour.from_order(inst, range(8))
    child, cmap = compress_instance(inst, np.zeros((0, 2), int), t)
    assert child is inst
    assert np.array_equal(cmap.to_parent, np.arange(8))
    assert np.array_equal(expand_to_parent(t, cmap).order, t.order)


def test_compress_ten_cycle():
    # a=0, b=1, c=2 with |ab| = 2 and |bc| = 3
    pts = [(0, 0), (2, 0), (5, 0), (6, 4), (5, 8), (2, 9), (0, 8), (-3, 7), (-4, 4), (-3, 1)]
    inst = Instance(pts)
    t = Tour.from_order(inst, range(10))
    child, cmap = compress_instance(inst, np.array([[0, 1], [1, 2]]), t)
    assert child.n == 9
    assert child.forced == {Edge(0, 1): 5}
    assert list(cmap.paths[Edge(0, 1)]) == [0, 1, 2]
    img = image_tour(child, cmap, t)
    assert validate_tour(child, img).ok and img.cost == t.cost
    back = expand_to_parent(img, cmap)
    assert back.has_edge(0, 1) and back.has_edge(1, 2)
    assert back.same_cycle(t) and back.cost == t.cost


def test_compress_rejects_non_path(rng):
    inst = Instance(rng.uniform(0, 10, (8, 2)))
    t = Tour.from_order(inst, range(8))
    with pytest.raises(ContractViolation):
        compress_instance(inst, np.array([[0, 4]]), t)
    with pytest.raises(ContractViolation):
        compress_instance(inst, t.edges(), t)


def test_expand_rejects_missing_forced():
    pts = [(0, 0), (2, 0), (5, 0), (6, 4), (5, 8), (2, 9)]
    inst = Instance(pts)
    t = Tour.from_order(inst, range(6))
    child, cmap = compress_instance(inst, np.array([[0, 1], [1, 2]]), t)
    bad = Tour.from_order(Instance(child.coords), [0, 2, 1, 3, 4])
    with pytest.raises(ContractViolation):
        expand_to_parent(bad, cmap)


def test_three_level_equality_chain(rng):
    inst = generate_instance("uniform", 600, seed=9)
    cur = build_initial_tour(inst, rng=rng)
    chain = [(inst, cur)]
    maps = []
    cfg = SolverConfig(m=30)
    for level in range(3):
        i, t = chain[-1]
        tours = [run_local_opt(i, t, 10, cfg, np.random.default_rng(level * 10 + r)) for r in range(3)]
        best = min(tours, key=lambda x: x.cost)
        fixed = fix_common_edges(tours, i.forced)
        child, cmap = compress_instance(i, fixed, best)
        img = image_tour(child, cmap, best)
        assert validate_tour(child, img).ok and img.cost == best.cost
        maps.append(cmap)
        chain.append((child, img))
    # improve at the deepest level then unwind
    deep_inst, deep = chain[-1]
    deep = run_local_opt(deep_inst, deep, 5, cfg, rng)
    t = deep
    for (parent, _), cmap in zip(reversed(chain[:-1]), reversed(maps)):
        t = expand_to_parent(t, cmap)
        assert validate_tour(parent, t).ok
        assert t.cost == deep.cost


def test_hdr_small_optimal(rng):
    for s in range(10):
        inst = Instance(rng.integers(0, 1000, (5, 2)))
        t, st = hdr_solve(inst, SolverConfig(seed=s))
        assert t.cost == held_karp_tour(inst).cost


def test_hdr_deadline_zero(rng):
    inst = Instance(rng.uniform(0, 1000, (200, 2)))
    t, st = hdr_solve(inst, SolverConfig(deadline=0))
    assert st.total_rounds == 0 and st.timed_out
    assert t.cost == st.init_cost


def test_hdr_deterministic_and_threads():
    inst = generate_instance("clustered", 800, seed=2)
    cfg = dict(m=40, k=4, seed=5, direct_solve_threshold=50)
    a, sa = hdr_solve(inst, SolverConfig(**cfg))
    b, sb = hdr_solve(inst, SolverConfig(**cfg))
    c, sc = hdr_solve(inst, SolverConfig(threads=4, **cfg))
    assert np.array_equal(a.order, b.order) and np.array_equal(a.order, c.order)
    assert sa.total_rounds == sb.total_rounds == sc.total_rounds
    assert [l.best_cost for l in sa.levels] == [l.best_cost for l in sc.levels]


def test_hdr_stats_invariants():
    inst = generate_instance("uniform", 1500, seed=3)
    t, st = hdr_solve(inst, SolverConfig(m=60, k=3, seed=2))
    assert validate_tour(inst, t).ok
    traj = [c for _, c in st.trajectory]
    assert all(b <= a for a, b in zip(traj, traj[1:]))
    assert st.total_rounds >= st.improvements
    assert st.best_cost == t.cost == traj[-1]
    ns = [l.n for l in st.levels]
    assert all(b <= a for a, b in zip(ns, ns[1:]))


def test_v1_never_compresses():
    inst = generate_instance("uniform", 500, seed=1)
    events = []
    t, st = hdr_solve(inst, SolverConfig(m=40, k=3, hierarchy_enabled=False, max_passes=3),
                      observer=lambda kind, data: events.append((kind, data)))
    assert not any(k == "compress" for k, _ in events)
    assert all(d["instance"] is inst for k, d in events if k != "compress")
    assert not inst.forced
    assert validate_tour(inst, t).ok


def test_repeated_passes_improve_or_stop():
    inst = generate_instance("uniform", 700, seed=8)
    one, s1 = hdr_solve(inst, SolverConfig(m=50, k=4, seed=3))
    many, s2 = hdr_solve(inst, SolverConfig(m=50, k=4, seed=3, max_passes=0))
    assert many.cost <= one.cost and s2.passes >= 1


@pytest.mark.slow
def test_initial_tour_within_band_of_final():
    inst = generate_instance("uniform", 10_000, seed=0)
    init = build_initial_tour(inst, rng=np.random.default_rng(1))
    t, _ = hdr_solve(inst, SolverConfig(seed=1), initial=init)
    assert init.cost <= 1.35 * t.cost
