# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Must stay output-identical to ``_pykernels``."""

import numpy as np
from libc.math cimport INFINITY


def pigeonhole_run(const long long[::1] cells, const unsigned char[::1] coins, Py_ssize_t n_cells):
    cdef Py_ssize_t T = cells.shape[0]
    cdef Py_ssize_t half = T // 2
    cdef Py_ssize_t t, k, tau = T
    cdef long long n_ctrl = 0, n_trt = 0
    cdef int lab
    counts0 = np.zeros(n_cells, dtype=np.int64)
    counts1 = np.zeros(n_cells, dtype=np.int64)
    out = np.empty(T, dtype=np.int8)
    cdef long long[::1] c0 = counts0
    cdef long long[::1] c1 = counts1
    cdef signed char[::1] w = out
    for t in range(T):
        k = cells[t]
        if n_ctrl == half:
            lab = 1
        elif n_trt == half:
            lab = 0
        elif c0[k] < c1[k]:
            lab = 0
        elif c0[k] > c1[k]:
            lab = 1
        else:
            lab = coins[t]
        w[t] = lab
        if lab:
            n_trt += 1
            c1[k] += 1
        else:
            n_ctrl += 1
            c0[k] += 1
        if tau == T and (n_ctrl == half or n_trt == half):
            tau = t + 1
    return out, tau


def assignment(const double[:, ::1] cost):
    """Return ``(col_of_row, u, v)`` with ``u_i + v_j <= cost_ij``, tight on the assignment."""
    cdef Py_ssize_t n = cost.shape[0]
    if cost.shape[1] != n:
        raise ValueError("cost matrix must be square")
    u_a = np.zeros(n + 1)
    v_a = np.zeros(n + 1)
    minv_a = np.empty(n + 1)
    p_a = np.zeros(n + 1, dtype=np.intp)
    way_a = np.zeros(n + 1, dtype=np.intp)
    used_a = np.zeros(n + 1, dtype=np.uint8)
    cdef double[::1] u = u_a
    cdef double[::1] v = v_a
    cdef double[::1] minv = minv_a
    cdef Py_ssize_t[::1] p = p_a
    cdef Py_ssize_t[::1] way = way_a
    cdef unsigned char[::1] used = used_a
    cdef Py_ssize_t i, j, j0, j1, i0, best
    cdef double delta, cur, ui0
    assigned_a = np.zeros(n + 1, dtype=np.uint8)
    cdef unsigned char[::1] assigned = assigned_a
    # column reduction: v_j = min_i c_ij, tight column minima seed the matching
    for j in range(1, n + 1):
        best = 0
        for i in range(1, n):
            if cost[i, j - 1] < cost[best, j - 1]:
                best = i
        v[j] = cost[best, j - 1]
        if not assigned[best + 1]:
            assigned[best + 1] = 1
            p[j] = best + 1
    for i in range(1, n + 1):
        if assigned[i]:
            continue
        p[0] = i
        j0 = 0
        for j in range(n + 1):
            minv[j] = INFINITY
            used[j] = 0
        while True:
            used[j0] = 1
            i0 = p[j0]
            ui0 = u[i0]
            delta = INFINITY
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1, j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
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
    for j in range(1, n + 1):
        result[p[j] - 1] = j - 1
    return result, u_a[1:].copy(), v_a[1:].copy()

