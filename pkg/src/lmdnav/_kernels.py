"""Numba-compiled inner loops: eikonal fast marching and grid raycasting.

Everything here works on plain numpy arrays so the kernels stay cacheable
and the callers own all domain types.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _heap_push(heap_d, heap_i, size, d, idx):
    heap_d[size] = d
    heap_i[size] = idx
    child = size
    while child > 0:
        parent = (child - 1) >> 1
        if heap_d[parent] <= heap_d[child]:
            break
        heap_d[parent], heap_d[child] = heap_d[child], heap_d[parent]
        heap_i[parent], heap_i[child] = heap_i[child], heap_i[parent]
        child = parent
    return size + 1


@njit(cache=True)
def _heap_pop(heap_d, heap_i, size):
    top_d = heap_d[0]
    top_i = heap_i[0]
    size -= 1
    heap_d[0] = heap_d[size]
    heap_i[0] = heap_i[size]
    parent = 0
    while True:
        left = 2 * parent + 1
        if left >= size:
            break
        right = left + 1
        best = left
        if right < size and heap_d[right] < heap_d[left]:
            best = right
        if heap_d[parent] <= heap_d[best]:
            break
        heap_d[parent], heap_d[best] = heap_d[best], heap_d[parent]
        heap_i[parent], heap_i[best] = heap_i[best], heap_i[parent]
        parent = best
    return top_d, top_i, size


@njit(cache=True)
def _upwind_value(dist, blocked, r, c, h):
    """First-order upwind update at (r, c) from its 4-neighborhood."""
    H, W = dist.shape
    a = np.inf
    if r > 0 and not blocked[r - 1, c] and dist[r - 1, c] < a:
        a = dist[r - 1, c]
    if r < H - 1 and not blocked[r + 1, c] and dist[r + 1, c] < a:
        a = dist[r + 1, c]
    b = np.inf
    if c > 0 and not blocked[r, c - 1] and dist[r, c - 1] < b:
        b = dist[r, c - 1]
    if c < W - 1 and not blocked[r, c + 1] and dist[r, c + 1] < b:
        b = dist[r, c + 1]
    if a > b:
        a, b = b, a
    if a == np.inf:
        return np.inf
    if b - a >= h:
        return a + h
    two_sided = 0.5 * (a + b + math.sqrt(2.0 * h * h - (b - a) * (b - a)))
    if two_sided >= b:
        return two_sided
    return a + h


@njit(cache=True)
def fmm_solve(blocked, seed_rows, seed_cols, seed_vals):
    """Fast marching over a unit-spacing grid.

    `blocked` cells never get a finite distance. Seeds carry prescribed
    values (0 for plain sources, exact Euclidean values when the caller
    pre-initializes a disk around a point source). Returns the distance
    field in cell units.
    """
    H, W = blocked.shape
    dist = np.full((H, W), np.inf)
    # 0 = far, 1 = in the narrow band, 2 = accepted
    state = np.zeros((H, W), dtype=np.uint8)
    cap = 8 * H * W + 64
    heap_d = np.empty(cap, dtype=np.float64)
    heap_i = np.empty(cap, dtype=np.int64)
    size = 0

    for k in range(seed_rows.shape[0]):
        r = seed_rows[k]
        c = seed_cols[k]
        if blocked[r, c]:
            continue
        if seed_vals[k] < dist[r, c]:
            dist[r, c] = seed_vals[k]
            state[r, c] = 1
            size = _heap_push(heap_d, heap_i, size, seed_vals[k], r * W + c)

    h = 1.0
    while size > 0:
        d, idx, size = _heap_pop(heap_d, heap_i, size)
        r = idx // W
        c = idx % W
        if state[r, c] == 2 or d > dist[r, c]:
            continue  # stale heap entry
        state[r, c] = 2
        for n in range(4):
            if n == 0:
                nr, nc = r - 1, c
            elif n == 1:
                nr, nc = r + 1, c
            elif n == 2:
                nr, nc = r, c - 1
            else:
                nr, nc = r, c + 1
            if nr < 0 or nr >= H or nc < 0 or nc >= W:
                continue
            if blocked[nr, nc] or state[nr, nc] == 2:
                continue
            cand = _upwind_value(dist, blocked, nr, nc, h)
            if cand < dist[nr, nc]:
                dist[nr, nc] = cand
                state[nr, nc] = 1
                size = _heap_push(heap_d, heap_i, size, cand, nr * W + nc)
    return dist


@njit(cache=True)
def eikonal_residual(dist, blocked, is_seed):
    """Max |dist - upwind_update| over finite non-seed cells."""
    H, W = dist.shape
    worst = 0.0
    for r in range(H):
        for c in range(W):
            if blocked[r, c] or is_seed[r, c] or not np.isfinite(dist[r, c]):
                continue
            resid = abs(dist[r, c] - _upwind_value(dist, blocked, r, c, 1.0))
            if resid > worst:
                worst = resid
    return worst


@njit(cache=True)
def raycast(
    occ,
    sem,
    pos_r,
    pos_c,
    heading,
    hfov,
    n_rays,
    max_range,
    obstacle,
    semantic,
    explored,
    predicted,
    noise_u,
    noise_cat,
    noise_rate,
    n_categories,
):
    """Cast a fan of rays and write observations into the map arrays.

    Amanatides-Woo traversal from a continuous start position. Cells
    crossed before a hit become Free+explored; the first occupied cell
    becomes Occupied+explored with its ground-truth category, corrupted to
    a uniformly drawn other category with probability `noise_rate` (the
    per-ray draws arrive pre-sampled in noise_u / noise_cat so the caller
    controls the stream). Every touched cell drops its predicted flag.
    """
    H, W = occ.shape
    r0 = int(math.floor(pos_r))
    c0 = int(math.floor(pos_c))
    if 0 <= r0 < H and 0 <= c0 < W and not occ[r0, c0]:
        obstacle[r0, c0] = 1
        explored[r0, c0] = True
        predicted[r0, c0] = False

    for k in range(n_rays):
        if n_rays == 1:
            ang = heading
        else:
            ang = heading - 0.5 * hfov + hfov * k / (n_rays - 1)
        dr = math.sin(ang)
        dc = math.cos(ang)
        r = r0
        c = c0
        # parametric distance to the next row/col boundary
        if dr > 1e-12:
            t_max_r = (r + 1.0 - pos_r) / dr
            t_delta_r = 1.0 / dr
            step_r = 1
        elif dr < -1e-12:
            t_max_r = (r - pos_r) / dr
            t_delta_r = -1.0 / dr
            step_r = -1
        else:
            t_max_r = np.inf
            t_delta_r = np.inf
            step_r = 0
        if dc > 1e-12:
            t_max_c = (c + 1.0 - pos_c) / dc
            t_delta_c = 1.0 / dc
            step_c = 1
        elif dc < -1e-12:
            t_max_c = (c - pos_c) / dc
            t_delta_c = -1.0 / dc
            step_c = -1
        else:
            t_max_c = np.inf
            t_delta_c = np.inf
            step_c = 0

        while True:
            if t_max_r <= t_max_c:
                t = t_max_r
                t_max_r += t_delta_r
                r += step_r
            else:
                t = t_max_c
                t_max_c += t_delta_c
                c += step_c
            if t > max_range or r < 0 or r >= H or c < 0 or c >= W:
                break
            explored[r, c] = True
            predicted[r, c] = False
            if occ[r, c]:
                obstacle[r, c] = 2
                cat = sem[r, c]
                if cat >= 0 and noise_rate > 0.0 and noise_u[k] < noise_rate:
                    other = noise_cat[k]
                    if other >= cat:
                        other += 1
                    cat = other
                semantic[r, c] = cat
                break
            obstacle[r, c] = 1
            semantic[r, c] = -1


@njit(cache=True)
def supercover_blocked(occ, r_from, c_from, r_to, c_to):
    """True if the segment between two continuous points crosses an
    occupied cell (endpoints' cells included)."""
    H, W = occ.shape
    r = int(math.floor(r_from))
    c = int(math.floor(c_from))
    r_end = int(math.floor(r_to))
    c_end = int(math.floor(c_to))
    if 0 <= r < H and 0 <= c < W and occ[r, c]:
        return True
    dr = r_to - r_from
    dc = c_to - c_from
    length = math.hypot(dr, dc)
    if length < 1e-12:
        return False
    dr /= length
    dc /= length
    if dr > 1e-12:
        t_max_r = (r + 1.0 - r_from) / dr
        t_delta_r = 1.0 / dr
        step_r = 1
    elif dr < -1e-12:
        t_max_r = (r - r_from) / dr
        t_delta_r = -1.0 / dr
        step_r = -1
    else:
        t_max_r = np.inf
        t_delta_r = np.inf
        step_r = 0
    if dc > 1e-12:
        t_max_c = (c + 1.0 - c_from) / dc
        t_delta_c = 1.0 / dc
        step_c = 1
    elif dc < -1e-12:
        t_max_c = (c - c_from) / dc
        t_delta_c = -1.0 / dc
        step_c = -1
    else:
        t_max_c = np.inf
        t_delta_c = np.inf
        step_c = 0

    while not (r == r_end and c == c_end):
        if t_max_r <= t_max_c:
            if t_max_r > length:
                break
            t_max_r += t_delta_r
            r += step_r
        else:
            if t_max_c > length:
                break
            t_max_c += t_delta_c
            c += step_c
        if r < 0 or r >= H or c < 0 or c >= W:
            return True
        if occ[r, c]:
            return True
    return False
