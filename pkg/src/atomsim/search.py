"""Flat-array grid-search kernels.

Everything here works on row-major flat indices over an ``rows x cols``
grid with 4-connectivity, occupancy given as a uint8 mask. Flat-index
order equals lexicographic ``(row, col)`` order, which is what every
deterministic tie-break in the planners relies on. The kernels are
numba-compiled; the planning loops above them stay in plain Python.
"""

from __future__ import annotations

import numpy as np
from numba import njit

UNREACHED = -1
_INF = np.int32(2**30)


@njit(cache=True)
def multi_source_vacant_dist(occ, rows, cols, seeds):
    """BFS distances through vacant cells from ``seeds`` (distance 0).

    Seeds may be occupied or vacant; expansion only enters vacant cells.
    Unreached cells stay at -1.
    """
    n = rows * cols
    dist = np.full(n, UNREACHED, np.int32)
    queue = np.empty(n, np.int32)
    head = 0
    tail = 0
    for k in range(seeds.size):
        s = seeds[k]
        if dist[s] == UNREACHED:
            dist[s] = 0
            queue[tail] = s
            tail += 1
    while head < tail:
        cur = queue[head]
        head += 1
        d = dist[cur] + 1
        r = cur // cols
        c = cur % cols
        if r > 0 and occ[cur - cols] == 0 and dist[cur - cols] == UNREACHED:
            dist[cur - cols] = d
            queue[tail] = cur - cols
            tail += 1
        if c > 0 and occ[cur - 1] == 0 and dist[cur - 1] == UNREACHED:
            dist[cur - 1] = d
            queue[tail] = cur - 1
            tail += 1
        if c + 1 < cols and occ[cur + 1] == 0 and dist[cur + 1] == UNREACHED:
            dist[cur + 1] = d
            queue[tail] = cur + 1
            tail += 1
        if r + 1 < rows and occ[cur + cols] == 0 and dist[cur + cols] == UNREACHED:
            dist[cur + cols] = d
            queue[tail] = cur + cols
            tail += 1
    return dist


@njit(cache=True)
def nearest_occupied(occ, eligible, rows, cols, starts):
    """Nearest occupied cell with ``eligible`` set, reachable from ``starts``.

    Starts are vacant cells at distance 0; the search walks vacant cells and
    inspects their occupied neighbors. Returns ``(index, distance)`` of the
    candidate minimizing (distance, index), or ``(-1, -1)``.
    """
    n = rows * cols
    dist = np.full(n, UNREACHED, np.int32)
    queue = np.empty(n, np.int32)
    head = 0
    tail = 0
    for k in range(starts.size):
        s = starts[k]
        if dist[s] == UNREACHED:
            dist[s] = 0
            queue[tail] = s
            tail += 1
    best_idx = -1
    best_dist = _INF
    while head < tail:
        cur = queue[head]
        head += 1
        d = dist[cur]
        if d + 1 > best_dist:
            break
        nd = d + 1
        r = cur // cols
        c = cur % cols
        for step in range(4):
            if step == 0:
                ok = r > 0
                nb = cur - cols
            elif step == 1:
                ok = c > 0
                nb = cur - 1
            elif step == 2:
                ok = c + 1 < cols
                nb = cur + 1
            else:
                ok = r + 1 < rows
                nb = cur + cols
            if not ok:
                continue
            if occ[nb] != 0:
                if eligible[nb] != 0 and (nd < best_dist or (nd == best_dist and nb < best_idx)):
                    best_dist = nd
                    best_idx = nb
            elif dist[nb] == UNREACHED:
                dist[nb] = nd
                queue[tail] = nb
                tail += 1
    if best_idx < 0:
        return -1, -1
    return best_idx, int(best_dist)


@njit(cache=True)
def lex_shortest_path(occ, rows, cols, src, dst):
    """Lexicographically smallest shortest path ``src -> dst``.

    Endpoints are exempt from the vacancy requirement on ``src`` (it holds
    the atom being moved); ``dst`` and all interior cells must be vacant.
    Returns flat indices ``[src, ..., dst]``, or an empty array when no
    unobstructed path exists.
    """
    n = rows * cols
    empty = np.empty(0, np.int32)
    if occ[dst] != 0 or src == dst:
        return empty
    dist = np.full(n, UNREACHED, np.int32)
    queue = np.empty(n, np.int32)
    dist[dst] = 0
    queue[0] = dst
    head = 0
    tail = 1
    while head < tail:
        cur = queue[head]
        head += 1
        d = dist[cur] + 1
        r = cur // cols
        c = cur % cols
        if r > 0 and occ[cur - cols] == 0 and dist[cur - cols] == UNREACHED:
            dist[cur - cols] = d
            queue[tail] = cur - cols
            tail += 1
        if c > 0 and occ[cur - 1] == 0 and dist[cur - 1] == UNREACHED:
            dist[cur - 1] = d
            queue[tail] = cur - 1
            tail += 1
        if c + 1 < cols and occ[cur + 1] == 0 and dist[cur + 1] == UNREACHED:
            dist[cur + 1] = d
            queue[tail] = cur + 1
            tail += 1
        if r + 1 < rows and occ[cur + cols] == 0 and dist[cur + cols] == UNREACHED:
            dist[cur + cols] = d
            queue[tail] = cur + cols
            tail += 1
    sr = src // cols
    sc = src % cols
    start_d = _INF
    if sr > 0 and occ[src - cols] == 0 and dist[src - cols] != UNREACHED and dist[src - cols] < start_d:
        start_d = dist[src - cols]
    if sc > 0 and occ[src - 1] == 0 and dist[src - 1] != UNREACHED and dist[src - 1] < start_d:
        start_d = dist[src - 1]
    if sc + 1 < cols and occ[src + 1] == 0 and dist[src + 1] != UNREACHED and dist[src + 1] < start_d:
        start_d = dist[src + 1]
    if sr + 1 < rows and occ[src + cols] == 0 and dist[src + cols] != UNREACHED and dist[src + cols] < start_d:
        start_d = dist[src + cols]
    if start_d >= _INF:
        return empty
    length = int(start_d) + 2
    path = np.empty(length, np.int32)
    path[0] = src
    cur = src
    rem = int(start_d)
    for pos in range(1, length):
        r = cur // cols
        c = cur % cols
        nxt = -1
        for step in range(4):
            if step == 0:
                ok = r > 0
                nb = cur - cols
            elif step == 1:
                ok = c > 0
                nb = cur - 1
            elif step == 2:
                ok = c + 1 < cols
                nb = cur + 1
            else:
                ok = r + 1 < rows
                nb = cur + cols
            if ok and occ[nb] == 0 and dist[nb] == rem and (nxt < 0 or nb < nxt):
                nxt = nb
        path[pos] = nxt
        cur = nxt
        rem -= 1
    return path


@njit(cache=True)
def monotone_obstacle_count(occ, rows, cols, src, dst):
    """Fewest occupied interior cells over monotone (staircase) paths src->dst."""
    sr = src // cols
    sc = src % cols
    tr = dst // cols
    tc = dst % cols
    H = abs(tr - sr) + 1
    W = abs(tc - sc) + 1
    dr = 1 if tr > sr else -1
    dc = 1 if tc > sc else -1
    h = np.empty((H, W), np.int32)
    for i in range(H - 1, -1, -1):
        for j in range(W - 1, -1, -1):
            if i == H - 1 and j == W - 1:
                h[i, j] = 0
                continue
            best = _INF
            if i + 1 < H:
                cell = (sr + (i + 1) * dr) * cols + (sc + j * dc)
                v = h[i + 1, j] + occ[cell]
                if v < best:
                    best = v
            if j + 1 < W:
                cell = (sr + i * dr) * cols + (sc + (j + 1) * dc)
                v = h[i, j + 1] + occ[cell]
                if v < best:
                    best = v
            h[i, j] = best
    return int(h[0, 0])


@njit(cache=True)
def monotone_obstacle_path(occ, rows, cols, src, dst):
    """Lexicographically smallest minimum-obstacle monotone path src->dst.

    Returns flat indices ``[src, ..., dst]``.
    """
    sr = src // cols
    sc = src % cols
    tr = dst // cols
    tc = dst % cols
    H = abs(tr - sr) + 1
    W = abs(tc - sc) + 1
    dr = 1 if tr > sr else -1
    dc = 1 if tc > sc else -1
    h = np.empty((H, W), np.int32)
    for i in range(H - 1, -1, -1):
        for j in range(W - 1, -1, -1):
            if i == H - 1 and j == W - 1:
                h[i, j] = 0
                continue
            best = _INF
            if i + 1 < H:
                cell = (sr + (i + 1) * dr) * cols + (sc + j * dc)
                v = h[i + 1, j] + occ[cell]
                if v < best:
                    best = v
            if j + 1 < W:
                cell = (sr + i * dr) * cols + (sc + (j + 1) * dc)
                v = h[i, j + 1] + occ[cell]
                if v < best:
                    best = v
            h[i, j] = best
    length = H + W - 1
    path = np.empty(length, np.int32)
    i = 0
    j = 0
    path[0] = src
    for pos in range(1, length):
        down_ok = False
        right_ok = False
        down_cell = -1
        right_cell = -1
        if i + 1 < H:
            down_cell = (sr + (i + 1) * dr) * cols + (sc + j * dc)
            down_ok = h[i + 1, j] + occ[down_cell] == h[i, j]
        if j + 1 < W:
            right_cell = (sr + i * dr) * cols + (sc + (j + 1) * dc)
            right_ok = h[i, j + 1] + occ[right_cell] == h[i, j]
        if down_ok and (not right_ok or down_cell < right_cell):
            i += 1
            path[pos] = down_cell
        else:
            j += 1
            path[pos] = right_cell
    return path


@njit(cache=True)
def best_source_within(occ, outside, rows, cols, v, dmax):
    """Best reachable source for a vacant target under an expanding search radius.

    Scans occupied outside-region cells at Manhattan distance 1..dmax from
    ``v`` in (distance, index) order and returns ``(index, obstacles)`` for
    the cell minimizing (monotone-path obstacle count, distance, index);
    ``(-1, -1)`` when no source lies within ``dmax``.
    """
    vr = v // cols
    vc = v % cols
    best_idx = -1
    best_obst = _INF
    for m in range(1, dmax + 1):
        for ddr in range(-m, m + 1):
            r = vr + ddr
            if r < 0 or r >= rows:
                continue
            rem = m - (ddr if ddr >= 0 else -ddr)
            for sgn in range(2):
                if rem == 0 and sgn == 1:
                    break
                c = vc - rem if sgn == 0 else vc + rem
                if c < 0 or c >= cols:
                    continue
                idx = r * cols + c
                if occ[idx] != 0 and outside[idx] != 0:
                    obst = monotone_obstacle_count(occ, rows, cols, idx, v)
                    if obst < best_obst:
                        best_obst = obst
                        best_idx = idx
        if best_obst == 0:
            break
    if best_idx < 0:
        return -1, -1
    return best_idx, int(best_obst)


@njit(cache=True)
def zero_one_bfs(occ, rows, cols, seeds):
    """Multi-source 0-1 BFS: entering an occupied cell costs 1, a vacant one 0.

    Seeds start at cost 0 regardless of their own occupancy. Returns
    ``(cost, parent)``; unreachable cells keep cost 2**30 and parent -1.
    """
    n = rows * cols
    cost = np.full(n, _INF, np.int32)
    parent = np.full(n, -1, np.int32)
    cap = 16 * n + seeds.size + 8
    buf = np.empty(cap, np.int32)
    head = 8 * n
    tail = head
    for k in range(seeds.size):
        s = seeds[k]
        if cost[s] > 0:
            cost[s] = 0
            buf[tail] = s
            tail += 1
    while head < tail:
        cur = buf[head]
        head += 1
        ccur = cost[cur]
        r = cur // cols
        c = cur % cols
        for step in range(4):
            if step == 0:
                ok = r > 0
                nb = cur - cols
            elif step == 1:
                ok = c > 0
                nb = cur - 1
            elif step == 2:
                ok = c + 1 < cols
                nb = cur + 1
            else:
                ok = r + 1 < rows
                nb = cur + cols
            if not ok:
                continue
            w = occ[nb]
            nc = ccur + w
            if nc < cost[nb]:
                cost[nb] = nc
                parent[nb] = cur
                if w == 0:
                    head -= 1
                    buf[head] = nb
                else:
                    buf[tail] = nb
                    tail += 1
    return cost, parent


def warmup():
    """Force-compile all kernels on a 2x2 grid (first call in a process)."""
    occ = np.zeros(4, np.uint8)
    occ[0] = 1
    seeds = np.array([3], np.int32)
    ones = np.ones(4, np.uint8)
    multi_source_vacant_dist(occ, 2, 2, seeds)
    nearest_occupied(occ, ones, 2, 2, seeds)
    lex_shortest_path(occ, 2, 2, 0, 3)
    monotone_obstacle_count(occ, 2, 2, 0, 3)
    monotone_obstacle_path(occ, 2, 2, 0, 3)
    best_source_within(occ, ones, 2, 2, 3, 2)
    zero_one_bfs(occ, 2, 2, seeds)
