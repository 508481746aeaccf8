"""Arrival-sequence generators: fixed constructions and seeded random families."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ArrivalSequence, CovariateSpace
from .errors import BadGamma, Indivisible, NotAPower, OddHorizon, SeqBalanceError

RIGHT_END_GAP = 1e-9


def _check_T(T: int) -> None:
    if T < 2 or T % 2:
        raise OddHorizon(f"horizon T={T} must be even and at least 2")


def gen_halfzero_halfone(T: int) -> ArrivalSequence:
    """``T/2`` zeros followed by ``T/2`` ones on the unit line."""
    _check_T(T)
    X = np.repeat([0.0, 1.0], T // 2)
    return ArrivalSequence(CovariateSpace.continuous(1), X)


def integer_root(T: int, p: int) -> int:
    """``k`` with ``k**p == T``; raises :class:`NotAPower` otherwise."""
    if T < 1 or p < 1:
        raise NotAPower(f"T={T} is not a {p}-th power")
    k = round(T ** (1.0 / p))
    for cand in (k - 1, k, k + 1):
        if cand >= 1 and cand**p == T:
            return cand
    raise NotAPower(f"T={T} is not a {p}-th power")


def grid_centers(k: int, p: int) -> np.ndarray:
    """Centers of the ``k**p`` equal subcubes, in lexicographic order."""
    axis = (np.arange(k) + 0.5) / k
    mesh = np.meshgrid(*([axis] * p), indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def gen_grid(T: int, p: int, shuffle_seed=None) -> ArrivalSequence:
    """One subject at the center of each of ``T`` equal subcubes.

    Arrival order is lexicographic unless ``shuffle_seed`` is given.
    """
    _check_T(T)
    k = integer_root(T, p)
    X = grid_centers(k, p)
    if shuffle_seed is not None:
        X = X[np.random.default_rng(shuffle_seed).permutation(T)]
    return ArrivalSequence(CovariateSpace.continuous(p), X)


def gen_alternating_lb(T: int, K: int, gap: float = RIGHT_END_GAP) -> ArrivalSequence:
    """Endpoint-alternating sequence over ``K`` equal cells.

    Arrivals visit the cells round-robin. Within cell ``k`` they alternate
    between its left end ``k/K`` and a point ``gap`` short of its right end,
    starting on the left, so every cell ends with ``T/K`` subjects split
    evenly between the two ends.
    """
    _check_T(T)
    if K < 1 or T % (2 * K):
        raise Indivisible(f"T={T} must be divisible by 2K={2 * K}")
    t = np.arange(T)
    cell = t % K
    visit = t // K
    left = np.arange(K, dtype=np.float64) / K
    right = np.arange(1, K + 1, dtype=np.float64) / K - gap
    X = np.where(visit % 2 == 0, left[cell], right[cell])
    return ArrivalSequence(CovariateSpace.continuous(1), X)


@dataclass(frozen=True)
class ClusterSpec:
    """Cluster centers (``N x p``) and the diameter exponent ``gamma``.

    At horizon ``T`` every cluster is the L-infinity box of side
    ``T**-gamma`` around its center, clipped to the unit cube.
    """

    centers: np.ndarray
    gamma: float

    def __post_init__(self):
        C = np.array(self.centers, dtype=np.float64, ndmin=2)
        C.flags.writeable = False
        object.__setattr__(self, "centers", C)
        if C.shape[0] < 1 or C.shape[1] < 1:
            raise SeqBalanceError("need at least one center with at least one coordinate")
        if not self.gamma > 0:
            raise BadGamma(f"gamma must be positive, got {self.gamma}")

    @classmethod
    def random(cls, N: int, p: int, gamma: float, seed=None) -> "ClusterSpec":
        return cls(np.random.default_rng(seed).random((N, p)), gamma)

    @property
    def p(self) -> int:
        return self.centers.shape[1]

    def boxes(self, T: int) -> tuple[np.ndarray, np.ndarray]:
        half = 0.5 * T ** (-self.gamma)
        lo = np.clip(self.centers - half, 0.0, 1.0)
        hi = np.clip(self.centers + half, 0.0, 1.0)
        if np.any(self.centers - half > 1.0) or np.any(self.centers + half < 0.0):
            raise SeqBalanceError("a cluster box misses the unit cube")
        return lo, hi


def gen_clustered(T: int, spec: ClusterSpec, seed=None) -> ArrivalSequence:
    """Pick a cluster uniformly, then a uniform point in its clipped box."""
    _check_T(T)
    rng = np.random.default_rng(seed)
    lo, hi = spec.boxes(T)
    which = rng.integers(0, spec.centers.shape[0], size=T)
    U = rng.random((T, spec.p))
    X = lo[which] + U * (hi[which] - lo[which])
    np.clip(X, lo[which], hi[which], out=X)
    return ArrivalSequence(CovariateSpace.continuous(spec.p), X)


def gen_uniform(T: int, p: int, seed=None) -> ArrivalSequence:
    _check_T(T)
    return ArrivalSequence(CovariateSpace.continuous(p), np.random.default_rng(seed).random((T, p)))


def gen_discrete_uniform(T: int, space: CovariateSpace, seed=None) -> ArrivalSequence:
    """I.i.d. subjects: uniform on the continuous part, uniform over each support."""
    _check_T(T)
    rng = np.random.default_rng(seed)
    cols = [rng.random((T, space.p))]
    for support in space.discrete_supports:
        vals = np.array(support)
        cols.append(vals[rng.integers(0, len(vals), size=T)].reshape(-1, 1))
    return ArrivalSequence(space, np.hstack(cols))


INSTANCES = ("halfzero", "grid", "alternating", "clustered", "discrete", "uniform")

