"""Minimum-weight perfect matchings under Euclidean cost.

Two problems:

* :func:`discrepancy`: bipartite matching between a control and a treated
  group. Its cost is the balance objective.
* :func:`min_weight_pairing`: perfect matching of one point set on the
  complete graph. This is what the matched-pair design needs.

Both reduce exactly before solving. In one dimension the sorted order is
optimal. Coincident points can always be matched to each other at zero cost
(swap argument using the triangle inequality), so they are cancelled first.
The general pairing solves the bipartite double cover and certifies the
result with its duals. Only when that relaxation has odd cycles does it
fall back to the blossom algorithm, warm-started from the same duals.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .blossom import max_weight_matching
from .core import as_points
from .errors import EmptyGroup, OddCount, SizeMismatch, SpaceMismatch, TooLarge

BRUTEFORCE_BIPARTITE_MAX = 8
BRUTEFORCE_PAIRING_MAX = 10
DEFAULT_MAX_NODES = 5000
_DENSE_BLOSSOM_MAX = 200
_KNN = 10


@dataclass(frozen=True)
class Matching:
    """A perfect matching and its total L2 cost.

    For bipartite results ``pairs`` holds ``(control_index, treated_index)``;
    for pairings it holds index pairs into the single input set. ``exact``
    is False only for the greedy approximation.
    """

    pairs: tuple[tuple[int, int], ...]
    cost: float
    exact: bool = True


def pair_cost(A: np.ndarray, B: np.ndarray, pairs) -> float:
    if not len(pairs):
        return 0.0
    idx = np.asarray(pairs, dtype=np.intp)
    diff = A[idx[:, 0]] - B[idx[:, 1]]
    return math.fsum(np.sqrt((diff * diff).sum(axis=1)).tolist())


def _distance_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    D = np.zeros((A.shape[0], B.shape[0]))
    for k in range(A.shape[1]):
        diff = A[:, k, None] - B[None, :, k]
        D += diff * diff
    return np.sqrt(D, out=D)


def _check_groups(control, treated) -> tuple[np.ndarray, np.ndarray]:
    A = as_points(control)
    B = as_points(treated)
    if A.shape[0] != B.shape[0]:
        raise SizeMismatch(f"groups differ in size: {A.shape[0]} vs {B.shape[0]}")
    if A.shape[0] == 0:
        raise EmptyGroup("groups must be nonempty")
    if A.shape[1] != B.shape[1]:
        raise SpaceMismatch(f"groups have dimensions {A.shape[1]} and {B.shape[1]}")
    return A, B


def _location_ids(X: np.ndarray) -> np.ndarray:
    _, inv = np.unique(X, axis=0, return_inverse=True)
    return inv.reshape(-1)


# --- bipartite ----------------------------------------------------------------


def discrepancy(control, treated, method: str = "auto") -> Matching:
    """Minimum-cost perfect matching between two equal-size groups.

    ``method`` is ``"auto"``, ``"sorted"`` (one dimension only) or
    ``"assignment"`` (dense Hungarian solve, no reductions).
    """
    A, B = _check_groups(control, treated)
    n, d = A.shape
    if method == "sorted" or (method == "auto" and d == 1):
        if d != 1:
            raise SpaceMismatch("sorted matching needs one-dimensional points")
        ia = np.argsort(A[:, 0], kind="stable")
        ib = np.argsort(B[:, 0], kind="stable")
        pairs = list(zip(ia.tolist(), ib.tolist()))
        return Matching(tuple(pairs), pair_cost(A, B, pairs))
    if method == "assignment":
        cols, _, _ = kernels.assignment(_distance_matrix(A, B))
        pairs = list(enumerate(cols.tolist()))
        return Matching(tuple(pairs), pair_cost(A, B, pairs))
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")

    ids = _location_ids(np.vstack([A, B]))
    ids_a, ids_b = ids[:n], ids[n:]
    pairs = []
    rest_a, rest_b = [], []
    order_a = np.argsort(ids_a, kind="stable")
    order_b = np.argsort(ids_b, kind="stable")
    bounds_a = np.searchsorted(ids_a[order_a], np.arange(ids.max() + 2))
    bounds_b = np.searchsorted(ids_b[order_b], np.arange(ids.max() + 2))
    for loc in range(ids.max() + 1):
        ga = order_a[bounds_a[loc] : bounds_a[loc + 1]]
        gb = order_b[bounds_b[loc] : bounds_b[loc + 1]]
        k = min(len(ga), len(gb))
        pairs.extend(zip(ga[:k].tolist(), gb[:k].tolist()))
        rest_a.extend(ga[k:].tolist())
        rest_b.extend(gb[k:].tolist())
    if rest_a:
        ra = np.array(rest_a, dtype=np.intp)
        rb = np.array(rest_b, dtype=np.intp)
        cols, _, _ = kernels.assignment(_distance_matrix(A[ra], B[rb]))
        pairs.extend(zip(ra.tolist(), rb[cols].tolist()))
    pairs.sort()
    return Matching(tuple(pairs), pair_cost(A, B, pairs))


def discrepancy_cost(control, treated) -> float:
    return discrepancy(control, treated).cost


def discrepancy_bruteforce(control, treated) -> Matching:
    """Exhaustive minimum over all ``n!`` bijections (test oracle, ``n <= 8``)."""
    A, B = _check_groups(control, treated)
    n = A.shape[0]
    if n > BRUTEFORCE_BIPARTITE_MAX:
        raise TooLarge(f"brute force limited to {BRUTEFORCE_BIPARTITE_MAX} per group, got {n}")
    D = _distance_matrix(A, B).tolist()
    best, best_perm = math.inf, None
    for perm in itertools.permutations(range(n)):
        c = math.fsum(D[i][j] for i, j in enumerate(perm))
        if c < best:
            best, best_perm = c, perm
    pairs = tuple(enumerate(best_perm))
    return Matching(pairs, pair_cost(A, B, pairs))


# --- general pairing --------------------------------------------------------------


def pairing_bruteforce(subjects) -> Matching:
    """Exhaustive minimum over all ``(n-1)!!`` perfect pairings (test oracle, ``n <= 10``)."""
    X = as_points(subjects)
    n = X.shape[0]
    if n % 2:
        raise OddCount(f"cannot pair an odd number ({n}) of subjects")
    if n > BRUTEFORCE_PAIRING_MAX:
        raise TooLarge(f"brute force limited to {BRUTEFORCE_PAIRING_MAX} subjects, got {n}")
    D = _distance_matrix(X, X).tolist()

    best = [math.inf, None]

    def extend(free, acc, cost):
        if cost >= best[0]:
            return
        if not free:
            best[0], best[1] = cost, list(acc)
            return
        i = free[0]
        for pos in range(1, len(free)):
            j = free[pos]
            acc.append((i, j))
            extend(free[1:pos] + free[pos + 1 :], acc, cost + D[i][j])
            acc.pop()

    extend(list(range(n)), [], 0.0)
    pairs = tuple(best[1] or ())
    return Matching(pairs, pair_cost(X, X, pairs))


def min_weight_pairing(
    subjects, max_nodes: int = DEFAULT_MAX_NODES, approximate: bool = False
) -> Matching:
    """Minimum-weight perfect matching on the complete graph over ``subjects``.

    Exact up to a rounding of each distance to a grid of about
    ``1e-12 * diameter`` used to keep the solver arithmetic integral.
    Instances with more than ``max_nodes`` points (after cancelling
    coincident ones) raise :class:`TooLarge` unless ``approximate=True``,
    which switches to a greedy closest-pair heuristic and marks the result
    ``exact=False``.
    """
    X = as_points(subjects)
    n = X.shape[0]
    if n % 2:
        raise OddCount(f"cannot pair an odd number ({n}) of subjects")
    if n == 0:
        return Matching((), 0.0)
    if X.shape[1] == 1:
        order = np.argsort(X[:, 0], kind="stable").tolist()
        pairs = [tuple(sorted(order[i : i + 2])) for i in range(0, n, 2)]
        return Matching(tuple(sorted(pairs)), pair_cost(X, X, pairs))

    ids = _location_ids(X)
    pairs = []
    rest = []
    order = np.argsort(ids, kind="stable")
    sorted_ids = ids[order]
    start = 0
    while start < n:
        stop = start
        while stop < n and sorted_ids[stop] == sorted_ids[start]:
            stop += 1
        group = order[start:stop].tolist()
        for i in range(0, len(group) - 1, 2):
            pairs.append((group[i], group[i + 1]))
        if len(group) % 2:
            rest.append(group[-1])
        start = stop

    exact = True
    if rest:
        R = np.array(sorted(rest), dtype=np.intp)
        if approximate:
            local = _greedy_pairing(X[R])
            exact = False
        else:
            if len(R) > max_nodes:
                raise TooLarge(
                    f"{len(R)} distinct points exceed the exact-solver guard of {max_nodes}; "
                    "pass approximate=True for the greedy heuristic"
                )
            local = _exact_pairing(X[R])
        pairs.extend((int(R[i]), int(R[j])) for i, j in local)
    pairs = sorted(tuple(sorted(p)) for p in pairs)
    return Matching(tuple(pairs), pair_cost(X, X, pairs), exact)


def _greedy_pairing(P: np.ndarray) -> list[tuple[int, int]]:
    """Repeatedly pair the globally closest free points. Approximate."""
    m = P.shape[0]
    D = _distance_matrix(P, P)
    iu, ju = np.triu_indices(m, k=1)
    order = np.argsort(D[iu, ju], kind="stable")
    taken = np.zeros(m, dtype=bool)
    out = []
    for e in order.tolist():
        i, j = int(iu[e]), int(ju[e])
        if not taken[i] and not taken[j]:
            taken[i] = taken[j] = True
            out.append((i, j))
            if len(out) * 2 == m:
                break
    return out


def _integer_costs(D: np.ndarray) -> np.ndarray:
    dmax = float(D.max())
    if dmax == 0.0:
        return np.zeros_like(D, dtype=np.int64)
    # power-of-two scale keeps dyadic inputs (grid centers) exact
    scale = 2.0 ** (40 - math.ceil(math.log2(dmax)))
    return np.rint(D * scale).astype(np.int64)


def _cycles(perm: np.ndarray) -> list[list[int]]:
    seen = np.zeros(perm.shape[0], dtype=bool)
    out = []
    for s in range(perm.shape[0]):
        if seen[s]:
            continue
        cyc = []
        v = s
        while not seen[v]:
            seen[v] = True
            cyc.append(v)
            v = int(perm[v])
        out.append(cyc)
    return out


def _exact_pairing(P: np.ndarray) -> list[tuple[int, int]]:
    m = P.shape[0]
    if m == 2:
        return [(0, 1)]
    D = _distance_matrix(P, P)
    C = _integer_costs(D)
    cmax = int(C.max())
    # Double cover: assignment on the symmetric matrix with a forbidding
    # diagonal. Any diagonal above 2*cmax keeps fixed points out of the optimum.
    big = 2 * cmax + 1
    Cf = C.astype(np.float64)
    np.fill_diagonal(Cf, float(big))
    perm, u, v = kernels.assignment(Cf)
    if max(np.abs(u).max(), np.abs(v).max()) >= 2.0**52:
        raise ArithmeticError("assignment potentials left the exact float range")

    cycles = _cycles(perm)
    if all(len(c) % 2 == 0 for c in cycles):
        # Half the double-cover optimum bounds every perfect matching from
        # below, and splitting each even cycle attains it.
        out = []
        for cyc in cycles:
            if len(cyc) == 2:
                out.append((cyc[0], cyc[1]))
                continue
            first = [(cyc[i], cyc[i + 1]) for i in range(0, len(cyc), 2)]
            second = [(cyc[i], cyc[(i + 1) % len(cyc)]) for i in range(1, len(cyc), 2)]
            c1 = sum(int(C[i, j]) for i, j in first)
            c2 = sum(int(C[i, j]) for i, j in second)
            out.extend(first if c1 <= c2 else second)
        return out

    # Symmetrised duals are feasible for the matching LP in the blossom
    # solver's doubled max-weight convention, and tight on 2-cycles.
    dual = (cmax - (u + v).astype(np.int64)).tolist()
    init_mate = [-1] * m
    for cyc in cycles:
        if len(cyc) == 2:
            init_mate[cyc[0]], init_mate[cyc[1]] = cyc[1], cyc[0]

    if m <= _DENSE_BLOSSOM_MAX:
        iu, ju = np.triu_indices(m, k=1)
        edges = list(zip(iu.tolist(), ju.tolist(), (cmax - C[iu, ju]).tolist()))
        res = max_weight_matching(m, edges, init_mate, dual)
        return _mate_pairs(res.mate)

    cand = set()
    k = min(_KNN, m - 1)
    nn = np.argpartition(D + np.diag(np.full(m, np.inf)), k - 1, axis=1)[:, :k]
    for i in range(m):
        for j in nn[i].tolist():
            cand.add((min(i, j), max(i, j)))
    for i in range(m):
        j = int(perm[i])
        cand.add((min(i, j), max(i, j)))
    while True:
        edges = [(i, j, cmax - int(C[i, j])) for i, j in sorted(cand)]
        res = max_weight_matching(m, edges, init_mate, dual)
        free = [x for x in range(m) if res.mate[x] < 0]
        if free:
            k = min(2 * k, m - 1)
            nn = np.argpartition(D + np.diag(np.full(m, np.inf)), k - 1, axis=1)[:, :k]
            for i in free:
                for j in nn[i].tolist():
                    cand.add((min(i, j), max(i, j)))
            continue
        violated = _violated_edges(res, C, cmax)
        if not violated:
            return _mate_pairs(res.mate)
        cand.update(violated)


def _mate_pairs(mate) -> list[tuple[int, int]]:
    return [(v, w) for v, w in enumerate(mate) if w > v]


def _violated_edges(res, C: np.ndarray, cmax: int, block: int = 256, per_row: int = 8):
    """Edges of the complete graph whose dual slack is negative."""
    m = C.shape[0]
    y = np.array(res.vertex_dual, dtype=np.int64)
    blossoms = [(np.array(leaves, dtype=np.intp), int(z)) for leaves, z in res.blossoms if z > 0]
    found = []
    for r0 in range(0, m, block):
        r1 = min(m, r0 + block)
        W = cmax - C[r0:r1]
        S = y[r0:r1, None] + y[None, :] - 2 * res.scale * W
        for leaves, z in blossoms:
            rows = leaves[(leaves >= r0) & (leaves < r1)]
            if rows.size:
                S[np.ix_(rows - r0, leaves)] += 2 * z
        S[np.arange(r1 - r0), np.arange(r0, r1)] = 0
        bad_r, bad_c = np.nonzero(S < 0)
        if bad_r.size:
            vals = S[bad_r, bad_c]
            order = np.lexsort((vals, bad_r))
            count = {}
            for e in order.tolist():
                i = int(bad_r[e]) + r0
                j = int(bad_c[e])
                if count.get(i, 0) < per_row:
                    count[i] = count.get(i, 0) + 1
                    found.append((min(i, j), max(i, j)))
    return set(found)
