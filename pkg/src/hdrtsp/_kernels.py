"""Compiled inner loops.

Everything here works on plain arrays so the public modules can keep
Python-level types. Vertex ids index ``xs``/``ys``; ``fn`` is an ``(n, 2)``
forced-neighbour table with ``-1`` for empty slots.
"""
import math

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True)


@njit(inline="always")
def dist(xs, ys, metric, u, v):
    dx = xs[u] - xs[v]
    dy = ys[u] - ys[v]
    d = math.sqrt(dx * dx + dy * dy)
    if metric == 0:
        return np.int64(math.floor(d + 0.5))
    return np.int64(math.ceil(d))


@njit(inline="always")
def fixed(fn, u, v):
    return fn[u, 0] == v or fn[u, 1] == v


# ---------------------------------------------------------------- grid kNN

@njit(**_JIT)
def _ring_collect(cx, cy, r, ncx, ncy, cell_start, items, xs, ys, qx, qy,
                  exclude, buf_id, buf_d, cnt):
    y_lo = cy - r
    y_hi = cy + r
    for gy in range(max(y_lo, 0), min(y_hi, ncy - 1) + 1):
        if gy == y_lo or gy == y_hi:
            step = 1
        else:
            step = 2 * r if r > 0 else 1
        gx = cx - r
        while gx <= cx + r:
            if 0 <= gx < ncx:
                cell = gy * ncx + gx
                for t in range(cell_start[cell], cell_start[cell + 1]):
                    v = items[t]
                    if v != exclude:
                        dx = xs[v] - qx
                        dy = ys[v] - qy
                        buf_id[cnt] = v
                        buf_d[cnt] = dx * dx + dy * dy
                        cnt += 1
            gx += step
    return cnt


@njit(**_JIT)
def knn_point(qx, qy, exclude, j, x0, y0, cs, ncx, ncy, cell_start, items,
              xs, ys, buf_id, buf_d):
    """Up to ``j`` indexed vertices nearest to ``(qx, qy)``, ties by id."""
    cx = int(math.floor((qx - x0) / cs))
    cy = int(math.floor((qy - y0) / cs))
    maxr = max(max(abs(cx), abs(cx - (ncx - 1))), max(abs(cy), abs(cy - (ncy - 1))))
    cnt = 0
    r = 0
    while True:
        cnt = _ring_collect(cx, cy, r, ncx, ncy, cell_start, items, xs, ys,
                            qx, qy, exclude, buf_id, buf_d, cnt)
        if r >= maxr:
            break
        if cnt >= j and r > 0:
            kth = np.partition(buf_d[:cnt], j - 1)[j - 1]
            bound = (r * cs) * (1.0 - 1e-9)
            if kth < bound * bound:
                break
        r += 1
    ids = buf_id[:cnt]
    d = buf_d[:cnt]
    o1 = np.argsort(ids, kind="mergesort")
    o2 = np.argsort(d[o1], kind="mergesort")
    sel = o1[o2]
    k = min(j, cnt)
    out = np.empty(k, dtype=np.int64)
    for t in range(k):
        out[t] = ids[sel[t]]
    return out


@njit(**_JIT)
def _knn_small(qx, qy, exclude, j, x0, y0, cs, ncx, ncy, cell_start, items,
               xs, ys, out_id, out_d):
    """Bounded insertion-sort variant of :func:`knn_point` for small ``j``."""
    cx = int(math.floor((qx - x0) / cs))
    cy = int(math.floor((qy - y0) / cs))
    maxr = max(max(abs(cx), abs(cx - (ncx - 1))), max(abs(cy), abs(cy - (ncy - 1))))
    cnt = 0
    r = 0
    while True:
        for gy in range(max(cy - r, 0), min(cy + r, ncy - 1) + 1):
            if gy == cy - r or gy == cy + r:
                step = 1
            else:
                step = 2 * r if r > 0 else 1
            gx = cx - r
            while gx <= cx + r:
                if 0 <= gx < ncx:
                    cell = gy * ncx + gx
                    for t in range(cell_start[cell], cell_start[cell + 1]):
                        v = items[t]
                        if v == exclude:
                            continue
                        dx = xs[v] - qx
                        dy = ys[v] - qy
                        d2 = dx * dx + dy * dy
                        if cnt == j:
                            if d2 > out_d[j - 1] or (d2 == out_d[j - 1] and v > out_id[j - 1]):
                                continue
                            q = j - 1
                        else:
                            q = cnt
                            cnt += 1
                        while q > 0 and (out_d[q - 1] > d2 or (out_d[q - 1] == d2 and out_id[q - 1] > v)):
                            out_d[q] = out_d[q - 1]
                            out_id[q] = out_id[q - 1]
                            q -= 1
                        out_d[q] = d2
                        out_id[q] = v
                gx += step
        if r >= maxr:
            break
        if cnt == j and r > 0:
            bound = (r * cs) * (1.0 - 1e-9)
            if out_d[j - 1] < bound * bound:
                break
        r += 1
    return cnt


@njit(**_JIT)
def knn_many(qids, j, x0, y0, cs, ncx, ncy, cell_start, items, xs, ys):
    """Neighbour table for many query vertices; rows padded with -1."""
    out = np.full((qids.size, j), -1, dtype=np.int64)
    buf_id = np.empty(max(j, items.size), dtype=np.int64)
    buf_d = np.empty(max(j, items.size), dtype=np.float64)
    for t in range(qids.size):
        q = qids[t]
        if j <= 32:
            c = _knn_small(xs[q], ys[q], q, j, x0, y0, cs, ncx, ncy, cell_start,
                           items, xs, ys, buf_id, buf_d)
            out[t, :c] = buf_id[:c]
        else:
            res = knn_point(xs[q], ys[q], q, j, x0, y0, cs, ncx, ncy, cell_start,
                            items, xs, ys, buf_id, buf_d)
            out[t, :res.size] = res
    return out


@njit(**_JIT)
def nearest_member(qids, x0, y0, cs, ncx, ncy, cell_start, items, xs, ys):
    """Closest indexed vertex for each query (a query may itself be indexed)."""
    out = np.empty(qids.size, dtype=np.int64)
    buf_id = np.empty(1, dtype=np.int64)
    buf_d = np.empty(1, dtype=np.float64)
    for t in range(qids.size):
        q = qids[t]
        _knn_small(xs[q], ys[q], -1, 1, x0, y0, cs, ncx, ncy, cell_start,
                   items, xs, ys, buf_id, buf_d)
        out[t] = buf_id[0]
    return out


@njit(**_JIT)
def nn_tour(start, x0, y0, cs, ncx, ncy, cell_start, items, xs, ys):
    """Nearest-neighbour tour over the indexed vertices, grid accelerated."""
    m = items.size
    cell_of = np.empty(m, dtype=np.int64)
    live = np.empty(ncx * ncy, dtype=np.int64)
    for c in range(ncx * ncy):
        live[c] = cell_start[c + 1] - cell_start[c]
        for t in range(cell_start[c], cell_start[c + 1]):
            cell_of[t] = c
    slot = {}
    for t in range(m):
        slot[items[t]] = t
    done = np.zeros(m, dtype=np.bool_)
    maxr = max(ncx, ncy)
    out = np.empty(m, dtype=np.int64)
    cur = start
    for step in range(m):
        out[step] = cur
        t = slot[cur]
        done[t] = True
        live[cell_of[t]] -= 1
        if step == m - 1:
            break
        qx = xs[cur]
        qy = ys[cur]
        cx = min(max(int(math.floor((qx - x0) / cs)), 0), ncx - 1)
        cy = min(max(int(math.floor((qy - y0) / cs)), 0), ncy - 1)
        best = -1
        best_d = np.inf
        best_id = -1
        for r in range(maxr + 1):
            for gy in range(max(cy - r, 0), min(cy + r, ncy - 1) + 1):
                if gy == cy - r or gy == cy + r:
                    gstep = 1
                else:
                    gstep = 2 * r if r > 0 else 1
                gx = cx - r
                while gx <= cx + r:
                    if 0 <= gx < ncx:
                        cell = gy * ncx + gx
                        if live[cell] > 0:
                            for s in range(cell_start[cell], cell_start[cell + 1]):
                                if done[s]:
                                    continue
                                v = items[s]
                                dx = xs[v] - qx
                                dy = ys[v] - qy
                                d2 = dx * dx + dy * dy
                                if d2 < best_d or (d2 == best_d and v < best_id):
                                    best_d = d2
                                    best = s
                                    best_id = v
                    gx += gstep
            if best >= 0:
                bound = (r * cs) * (1.0 - 1e-9)
                if best_d < bound * bound:
                    break
        cur = items[best]
    return out


@njit(**_JIT)
def hilbert_keys(xs, ys, x0, y0, side, bits):
    top = (1 << bits) - 1
    out = np.empty(xs.size, dtype=np.int64)
    for i in range(xs.size):
        x = min(int((xs[i] - x0) / side * top), top)
        y = min(int((ys[i] - y0) / side * top), top)
        d = 0
        s = 1 << (bits - 1)
        while s > 0:
            rx = 1 if (x & s) > 0 else 0
            ry = 1 if (y & s) > 0 else 0
            d += s * s * ((3 * rx) ^ ry)
            if ry == 0:
                if rx == 1:
                    x = top - x
                    y = top - y
                x, y = y, x
            s >>= 1
        out[i] = d
    return out


# ---------------------------------------------------------------- destroy

@njit(**_JIT)
def select_positions(cand, order, pos, fn, m):
    """Tour positions of up to ``m`` non-forced edges incident to ``cand``.

    Position ``p`` denotes the edge ``(order[p], order[p + 1])``. Edges are
    taken in candidate order; the two edges of one vertex by canonical pair.
    """
    n = order.size
    mark = np.zeros(n, dtype=np.bool_)
    out = np.empty(min(m, n), dtype=np.int64)
    cnt = 0
    for t in range(cand.size):
        v = cand[t]
        p = pos[v]
        pp = (p - 1 + n) % n
        a = order[pp]
        b = order[(p + 1) % n]
        ka0 = min(v, a)
        ka1 = max(v, a)
        kb0 = min(v, b)
        kb1 = max(v, b)
        first_pred = ka0 < kb0 or (ka0 == kb0 and ka1 < kb1)
        for k in range(2):
            if (k == 0) == first_pred:
                e, w = pp, a
            else:
                e, w = p, b
            if mark[e] or fixed(fn, v, w):
                continue
            mark[e] = True
            out[cnt] = e
            cnt += 1
            if cnt == m:
                return out[:cnt]
    return out[:cnt]


# ---------------------------------------------------------------- expansion

@njit(**_JIT)
def expand_segments(parent_order, seg_start, seg_len, sub_seg, sub_head, sub_tour):
    """Parent order obtained by replacing each sub-tour unit with its segment."""
    n = parent_order.size
    s = sub_tour.size
    partner = np.full(s, -1, dtype=np.int64)
    first_of = np.full(seg_start.size, -1, dtype=np.int64)
    for v in range(s):
        g = sub_seg[v]
        if seg_len[g] > 1:
            if first_of[g] < 0:
                first_of[g] = v
            else:
                partner[v] = first_of[g]
                partner[first_of[g]] = v
    rot = 0
    for i in range(s):
        if partner[sub_tour[i]] != sub_tour[i - 1]:
            rot = i
            break
    out = np.empty(n, dtype=np.int64)
    w = 0
    i = 0
    while i < s:
        v = sub_tour[(rot + i) % s]
        g = sub_seg[v]
        ln = seg_len[g]
        st = seg_start[g]
        if ln == 1:
            out[w] = parent_order[st]
            w += 1
            i += 1
            continue
        if sub_head[v]:
            for q in range(ln):
                out[w] = parent_order[(st + q) % n]
                w += 1
        else:
            for q in range(ln - 1, -1, -1):
                out[w] = parent_order[(st + q) % n]
                w += 1
        i += 2
    return out


# ---------------------------------------------------------------- local search

@njit(inline="always")
def _reverse(tour, pos, i, j):
    s = tour.size
    ln = (j - i) % s + 1
    if 2 * ln > s:
        i, j = (j + 1) % s, (i - 1) % s
        ln = s - ln
    for _ in range(ln // 2):
        a = tour[i]
        b = tour[j]
        tour[i] = b
        pos[b] = i
        tour[j] = a
        pos[a] = j
        i = (i + 1) % s
        j = (j - 1) % s


@njit(inline="always")
def _push(queue, inq, qs, v):
    if not inq[v]:
        inq[v] = True
        queue[(qs[0] + qs[1]) % queue.size] = v
        qs[1] += 1


@njit(**_JIT)
def _try_2opt(a, tour, pos, xs, ys, metric, fn, neigh, queue, inq, qs, ev):
    s = tour.size
    for dirn in range(2):
        if dirn == 0:
            b = tour[(pos[a] + 1) % s]
        else:
            b = tour[pos[a] - 1]
        if fixed(fn, a, b):
            continue
        dab = dist(xs, ys, metric, a, b)
        for kk in range(neigh.shape[1]):
            c = neigh[a, kk]
            if c < 0:
                break
            ev[0] += 1
            dac = dist(xs, ys, metric, a, c)
            if dac >= dab:
                break
            if dirn == 0:
                d = tour[(pos[c] + 1) % s]
            else:
                d = tour[pos[c] - 1]
            if c == b or d == a or fixed(fn, c, d):
                continue
            delta = dac + dist(xs, ys, metric, b, d) - dab - dist(xs, ys, metric, c, d)
            if delta < 0:
                if dirn == 0:
                    _reverse(tour, pos, pos[b], pos[c])
                else:
                    _reverse(tour, pos, pos[a], pos[d])
                _push(queue, inq, qs, a)
                _push(queue, inq, qs, b)
                _push(queue, inq, qs, c)
                _push(queue, inq, qs, d)
                return delta
    return 0


@njit(**_JIT)
def _move_segment(tour, pos, first, ln, end, c, c2):
    """Reinsert the forward run tour[first:first+ln] between adjacent c, c2."""
    s = tour.size
    seg = np.empty(ln, dtype=np.int64)
    for q in range(ln):
        seg[q] = tour[(first + q) % s]
    if seg[0] != end:
        seg = seg[::-1].copy()
    rest = np.empty(s - ln, dtype=np.int64)
    for q in range(s - ln):
        rest[q] = tour[(first + ln + q) % s]
    ic = -1
    ic2 = -1
    for q in range(s - ln):
        if rest[q] == c:
            ic = q
        elif rest[q] == c2:
            ic2 = q
    w = 0
    if ic2 == ic + 1:
        for q in range(ic + 1):
            tour[w] = rest[q]
            w += 1
        for q in range(ln):
            tour[w] = seg[q]
            w += 1
        for q in range(ic + 1, s - ln):
            tour[w] = rest[q]
            w += 1
    else:
        for q in range(ic2 + 1):
            tour[w] = rest[q]
            w += 1
        for q in range(ln - 1, -1, -1):
            tour[w] = seg[q]
            w += 1
        for q in range(ic2 + 1, s - ln):
            tour[w] = rest[q]
            w += 1
    for q in range(s):
        pos[tour[q]] = q


@njit(**_JIT)
def _try_oropt(a, tour, pos, xs, ys, metric, fn, neigh, queue, inq, qs, ev):
    s = tour.size
    for dirn in range(2):
        step = 1 if dirn == 0 else s - 1
        back = s - 1 if dirn == 0 else 1
        e = a
        for ln in range(1, 4):
            if ln > 1:
                e = tour[(pos[e] + step) % s]
            if ln > s - 3:
                break
            p = tour[(pos[a] + back) % s]
            nx = tour[(pos[e] + step) % s]
            if fixed(fn, p, a) or fixed(fn, e, nx):
                continue
            ev[0] += 1
            gain = (dist(xs, ys, metric, p, a) + dist(xs, ys, metric, e, nx)
                    - dist(xs, ys, metric, p, nx))
            if gain <= 0:
                continue
            first = pos[a] if dirn == 0 else pos[e]
            for side in range(2 if ln > 1 else 1):
                end = a if side == 0 else e
                other = e if side == 0 else a
                for kk in range(neigh.shape[1]):
                    c = neigh[end, kk]
                    if c < 0:
                        break
                    ev[0] += 1
                    dc = dist(xs, ys, metric, end, c)
                    if dc >= gain:
                        break
                    if (pos[c] - first) % s < ln:
                        continue
                    for cs in range(2):
                        if cs == 0:
                            c2 = tour[(pos[c] + 1) % s]
                        else:
                            c2 = tour[pos[c] - 1]
                        if (pos[c2] - first) % s < ln or fixed(fn, c, c2):
                            continue
                        delta = (dc + dist(xs, ys, metric, other, c2)
                                 - dist(xs, ys, metric, c, c2) - gain)
                        if delta < 0:
                            _move_segment(tour, pos, first, ln, end, c, c2)
                            _push(queue, inq, qs, a)
                            _push(queue, inq, qs, e)
                            _push(queue, inq, qs, p)
                            _push(queue, inq, qs, nx)
                            _push(queue, inq, qs, c)
                            _push(queue, inq, qs, c2)
                            return delta
    return 0


@njit(**_JIT)
def _descend(tour, pos, xs, ys, metric, fn, neigh, queue, inq, qs, ev, limit):
    total = 0
    while qs[1] > 0 and ev[0] < limit:
        a = queue[qs[0]]
        qs[0] = (qs[0] + 1) % queue.size
        qs[1] -= 1
        inq[a] = False
        d = _try_2opt(a, tour, pos, xs, ys, metric, fn, neigh, queue, inq, qs, ev)
        if d == 0:
            d = _try_oropt(a, tour, pos, xs, ys, metric, fn, neigh, queue, inq, qs, ev)
        total += d
    return total


@njit(**_JIT)
def free_cost(tour, xs, ys, metric, fn):
    """Cycle length counting only non-forced edges (geometric part)."""
    s = tour.size
    c = 0
    for i in range(s):
        u = tour[i]
        v = tour[(i + 1) % s]
        if not fixed(fn, u, v):
            c += dist(xs, ys, metric, u, v)
    return c


@njit(**_JIT)
def _kick(tour, pos, xs, ys, metric, fn, window, out_touched):
    """Local double bridge: swap two adjacent short runs. Returns (ok, delta)."""
    s = tour.size
    w = min(s, window)
    for _ in range(10):
        r = np.random.randint(0, s)
        x1 = np.random.randint(1, w - 2)
        x2 = np.random.randint(x1 + 1, w - 1)
        x3 = np.random.randint(x2 + 1, w)
        a0 = tour[(r + x1 - 1) % s]
        a1 = tour[(r + x1) % s]
        b0 = tour[(r + x2 - 1) % s]
        b1 = tour[(r + x2) % s]
        c0 = tour[(r + x3 - 1) % s]
        c1 = tour[(r + x3) % s]
        if fixed(fn, a0, a1) or fixed(fn, b0, b1) or fixed(fn, c0, c1):
            continue
        delta = (dist(xs, ys, metric, a0, b1) + dist(xs, ys, metric, c0, a1)
                 + dist(xs, ys, metric, b0, c1) - dist(xs, ys, metric, a0, a1)
                 - dist(xs, ys, metric, b0, b1) - dist(xs, ys, metric, c0, c1))
        ln = x3 - x1
        tmp = np.empty(ln, dtype=np.int64)
        q = 0
        for k in range(x2, x3):
            tmp[q] = tour[(r + k) % s]
            q += 1
        for k in range(x1, x2):
            tmp[q] = tour[(r + k) % s]
            q += 1
        for k in range(ln):
            v = tmp[k]
            p = (r + x1 + k) % s
            tour[p] = v
            pos[v] = p
        out_touched[0] = a0
        out_touched[1] = a1
        out_touched[2] = b0
        out_touched[3] = b1
        out_touched[4] = c0
        out_touched[5] = c1
        return True, delta
    return False, 0


@njit(**_JIT)
def ils(xs, ys, metric, fn, neigh, tour0, budget, seed, window):
    """Iterated 2-opt/Or-opt with local double-bridge kicks, accept-if-better.

    The first descent always completes; the kicks then consume ``budget``
    move evaluations. Forced adjacencies are never broken. Returns the best
    tour (never worse than ``tour0``) and the evaluations spent.
    """
    np.random.seed(seed)
    s = tour0.size
    tour = tour0.copy()
    if s <= 3:
        return tour, 0
    pos = np.empty(s, dtype=np.int64)
    for i in range(s):
        pos[tour[i]] = i
    queue = np.empty(s, dtype=np.int64)
    inq = np.zeros(s, dtype=np.bool_)
    qs = np.zeros(2, dtype=np.int64)
    ev = np.zeros(1, dtype=np.int64)
    for i in range(s):
        _push(queue, inq, qs, tour[i])
    unlimited = np.int64(2) ** 62
    cur = free_cost(tour, xs, ys, metric, fn)
    cur += _descend(tour, pos, xs, ys, metric, fn, neigh, queue, inq, qs, ev, unlimited)
    best = tour.copy()
    best_cost = cur
    touched = np.empty(6, dtype=np.int64)
    if s < 5:
        return best, ev[0]
    while ev[0] < budget:
        ev[0] += 1
        ok, delta = _kick(tour, pos, xs, ys, metric, fn, window, touched)
        if not ok:
            continue
        cur += delta
        for t in range(6):
            _push(queue, inq, qs, touched[t])
        cur += _descend(tour, pos, xs, ys, metric, fn, neigh, queue, inq, qs, ev, unlimited)
        if cur < best_cost:
            best[:] = tour
            best_cost = cur
        else:
            tour[:] = best
            for i in range(s):
                pos[tour[i]] = i
            cur = best_cost
    return best, ev[0]


# ---------------------------------------------------------------- exact oracle

@njit(**_JIT)
def held_karp(cost, forced):
    """Minimum Hamiltonian cycle containing every ``forced[i, j]`` adjacency.

    Forced pairs are discounted by a constant larger than any tour so the
    optimum maximises the number of forced edges first. Returns the order.
    """
    n = cost.shape[0]
    big = np.int64(1)
    for i in range(n):
        for j in range(n):
            big += cost[i, j]
    w = cost.copy()
    for i in range(n):
        for j in range(n):
            if forced[i, j]:
                w[i, j] -= big
    k = n - 1
    full = (1 << k) - 1
    inf = np.int64(2) ** 62
    dp = np.full((1 << k, k), inf, dtype=np.int64)
    par = np.full((1 << k, k), -1, dtype=np.int64)
    for j in range(k):
        dp[1 << j, j] = w[0, j + 1]
    for mask in range(1, full + 1):
        for j in range(k):
            if not (mask >> j) & 1:
                continue
            cur = dp[mask, j]
            if cur == inf:
                continue
            for t in range(k):
                if (mask >> t) & 1:
                    continue
                nm = mask | (1 << t)
                val = cur + w[j + 1, t + 1]
                if val < dp[nm, t]:
                    dp[nm, t] = val
                    par[nm, t] = j
    best = inf
    last = -1
    for j in range(k):
        val = dp[full, j] + w[j + 1, 0]
        if val < best:
            best = val
            last = j
    order = np.empty(n, dtype=np.int64)
    order[0] = 0
    mask = full
    j = last
    for q in range(n - 1, 0, -1):
        order[q] = j + 1
        pj = par[mask, j]
        mask ^= 1 << j
        j = pj
    return order


# ---------------------------------------------------------------- init 2-opt

@njit(inline="always")
def _wreverse(order, pos, start, lo, hi):
    n = order.size
    while lo < hi:
        i = (start + lo) % n
        j = (start + hi) % n
        a = order[i]
        b = order[j]
        order[i] = b
        pos[b] = i
        order[j] = a
        pos[a] = j
        lo += 1
        hi -= 1


@njit(**_JIT)
def window_2opt_full(order, pos, xs, ys, metric, fn, start, length):
    """Exhaustive first-improvement 2-opt on the path order[start:start+length]."""
    n = order.size
    total = 0
    improved = True
    while improved:
        improved = False
        for i in range(length - 2):
            for j in range(i + 2, length - 1):
                a = order[(start + i) % n]
                b = order[(start + i + 1) % n]
                c = order[(start + j) % n]
                d = order[(start + j + 1) % n]
                if fixed(fn, a, b) or fixed(fn, c, d):
                    continue
                delta = (dist(xs, ys, metric, a, c) + dist(xs, ys, metric, b, d)
                         - dist(xs, ys, metric, a, b) - dist(xs, ys, metric, c, d))
                if delta < 0:
                    _wreverse(order, pos, start, i + 1, j)
                    total += delta
                    improved = True
    return total


@njit(**_JIT)
def window_2opt_nl(order, pos, xs, ys, metric, fn, neigh, start, length, inq, queue):
    """Neighbour-list 2-opt with a work queue on a window of the tour.

    ``inq`` is an all-False scratch array of size n and is left all-False.
    """
    n = order.size
    total = 0
    for x in range(length):
        queue[x] = order[(start + x) % n]
        inq[queue[x]] = True
    head = 0
    size = length
    while size > 0:
        a = queue[head]
        head = (head + 1) % length
        size -= 1
        inq[a] = False
        i = (pos[a] - start) % n
        done = False
        for dirn in range(2):
            if dirn == 0:
                if i + 1 > length - 1:
                    continue
                b = order[(start + i + 1) % n]
            else:
                if i < 1:
                    continue
                b = order[(start + i - 1) % n]
            if fixed(fn, a, b):
                continue
            dab = dist(xs, ys, metric, a, b)
            for kk in range(neigh.shape[1]):
                c = neigh[a, kk]
                if c < 0:
                    break
                dac = dist(xs, ys, metric, a, c)
                if dac >= dab:
                    break
                j = (pos[c] - start) % n
                if j >= length:
                    continue
                if dirn == 0:
                    if j + 1 > length - 1:
                        continue
                    d = order[(start + j + 1) % n]
                else:
                    if j < 1:
                        continue
                    d = order[(start + j - 1) % n]
                if c == b or d == a or fixed(fn, c, d):
                    continue
                delta = dac + dist(xs, ys, metric, b, d) - dab - dist(xs, ys, metric, c, d)
                if delta < 0:
                    if dirn == 0:
                        if i < j:
                            _wreverse(order, pos, start, i + 1, j)
                        else:
                            _wreverse(order, pos, start, j + 1, i)
                    else:
                        if i < j:
                            _wreverse(order, pos, start, i, j - 1)
                        else:
                            _wreverse(order, pos, start, j, i - 1)
                    total += delta
                    for v in (a, b, c, d):
                        if not inq[v]:
                            inq[v] = True
                            queue[(head + size) % length] = v
                            size += 1
                    done = True
                    break
            if done:
                break
    return total


@njit(**_JIT)
def window_sweep(order, pos, xs, ys, metric, fn, neigh, anchors, subpaths):
    """One sweep of windowed 2-opt; window w spans ``subpaths`` sub-paths
    starting at sample vertex ``anchors[w]``."""
    n = order.size
    S = anchors.size
    inq = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    total = 0
    for w in range(S):
        start = pos[anchors[w]]
        if S <= subpaths:
            length = n
        else:
            end = pos[anchors[(w + subpaths) % S]]
            length = (end - start) % n + 1
        if length < 4:
            continue
        total += window_2opt_nl(order, pos, xs, ys, metric, fn, neigh, start, length, inq, queue)
    return total
