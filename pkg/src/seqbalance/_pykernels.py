"""Pure-Python/numpy versions of the compiled kernels.

Same algorithms, same tie-breaking and the same floating-point operation
order as ``_ckernels``, so both backends return identical results.
"""

from __future__ import annotations

import numpy as np


def pigeonhole_run(cells, coins, n_cells):
    cells = np.asarray(cells, dtype=np.int64)
    coins = np.asarray(coins, dtype=np.uint8)
    T = cells.shape[0]
    half = T // 2
    c0 = [0] * n_cells
    c1 = [0] * n_cells
    n_ctrl = n_trt = 0
    tau = T
    out = [0] * T
    for t, (k, coin) in enumerate(zip(cells.tolist(), coins.tolist())):
        if n_ctrl == half:
            lab = 1
        elif n_trt == half:
            lab = 0
        elif c0[k] < c1[k]:
            lab = 0
        elif c0[k] > c1[k]:
            lab = 1
        else:
            lab = coin
        out[t] = lab
        if lab:
            n_trt += 1
            c1[k] += 1
        else:
            n_ctrl += 1
            c0[k] += 1
        if tau == T and (n_ctrl == half or n_trt == half):
            tau = t + 1
    return np.array(out, dtype=np.int8), tau


def assignment(cost):
    """Shortest-augmenting-path Hungarian method with row/column potentials.

    Returns ``(col_of_row, u, v)`` with ``u_i + v_j <= cost_ij``, tight on
    the assignment.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    n = cost.shape[0]
    if cost.ndim != 2 or cost.shape[1] != n:
        raise ValueError("cost matrix must be square")
    C = np.zeros((n + 1, n + 1))
    C[1:, 1:] = cost
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.intp)
    way = np.zeros(n + 1, dtype=np.intp)
    assigned = np.zeros(n + 1, dtype=bool)
    # column reduction: v_j = min_i c_ij, tight column minima seed the matching
    if n:
        best = np.argmin(cost, axis=0)
        v[1:] = cost[best, np.arange(n)]
        for j, b in enumerate(best.tolist(), start=1):
            if not assigned[b + 1]:
                assigned[b + 1] = True
                p[j] = b + 1
    for i in range(1, n + 1):
        if assigned[i]:
            continue
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used
            cur = (C[i0] - u[i0]) - v
            upd = free & (cur < minv)
            minv[upd] = cur[upd]
            way[upd] = j0
            masked = np.where(free, minv, np.inf)
            j1 = int(np.argmin(masked))
            delta = masked[j1]
            u[p[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    result = np.empty(n, dtype=np.intp)
    result[p[1:] - 1] = np.arange(n)
    return result, u[1:].copy(), v[1:].copy()

