"""Assignment designs and the pigeonhole partitions they use.

Three designs produce an :class:`~seqbalance.core.AssignmentTrace`:

* :func:`crd_assign` draws a uniformly random half of the horizon as control
  up front and ignores covariates.
* :func:`pigeonhole_assign` routes each arrival to a cell of a fixed
  :class:`Partition` and gives it to whichever group is smaller in that cell,
  breaking ties with a fair coin and forcing the remainder once a group is
  full.
* :func:`matched_pair_assign` sees the whole sequence, pairs subjects by
  minimum total distance and splits every pair with a fair coin.

Cells are half-open ``[i/K, (i+1)/K)`` with the last one closed at 1. The
boundaries are the floating-point values ``i/K``, so a coordinate equal to
a computed boundary always lands in the cell to its right.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import CONTROL, TREATED, ArrivalSequence, AssignmentTrace, CovariateSpace, Subject
from .errors import BadC, BadEta, BadGamma, BadPhi, HasContinuous, OddHorizon, SeqBalanceError
from .matching import DEFAULT_MAX_NODES, Matching, min_weight_pairing, pair_cost

CellKey = tuple[tuple[float, ...], tuple[int, ...]]
"""``(discrete values, per-dimension interval indices)``."""

PARTITION_KINDS = ("uniform_1d", "grid", "natural", "mixed", "clustered", "single")


def _count(target: float) -> int:
    # guard against T**eta landing a hair above an exact integer
    return max(1, math.ceil(target * (1.0 - 1e-12)))


def _check_T(T: int) -> None:
    if T < 2 or T % 2:
        raise OddHorizon(f"horizon T={T} must be even and at least 2")


@dataclass(frozen=True)
class Partition:
    """A finite partition of the covariate cube into pigeonholes.

    The first ``p`` coordinates are cut into ``K`` equal intervals each;
    when ``use_discrete`` is set, the remaining coordinates contribute their
    exact values to the key. ``params`` records how the partition was built.
    """

    kind: str
    p: int
    K: int
    use_discrete: bool = False
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in PARTITION_KINDS:
            raise SeqBalanceError(f"unknown partition kind {self.kind!r}")
        if self.K < 1 or self.p < 0:
            raise SeqBalanceError(f"invalid partition shape p={self.p}, K={self.K}")

    @classmethod
    def single(cls) -> "Partition":
        return cls("single", p=0, K=1)

    @classmethod
    def uniform(cls, K: int, p: int = 1) -> "Partition":
        """``K`` equal intervals on each of ``p`` continuous coordinates."""
        return cls("uniform_1d" if p == 1 else "grid", p=p, K=int(K), params={"K": int(K)})

    @property
    def width(self) -> float:
        return 1.0 / self.K

    def _edges(self) -> np.ndarray:
        return np.arange(self.K, dtype=np.float64) / self.K

    def interval_index(self, x: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._edges(), x, side="right") - 1
        return np.clip(idx, 0, self.K - 1)

    def _check_width(self, X: np.ndarray) -> None:
        if X.shape[1] < self.p:
            raise SeqBalanceError(f"partition needs {self.p} continuous coordinates, points have {X.shape[1]}")

    def key(self, subject: Subject) -> CellKey:
        cont = np.asarray(subject.continuous, dtype=np.float64)
        if cont.shape[0] < self.p:
            raise SeqBalanceError(f"partition needs {self.p} continuous coordinates")
        idx = tuple(int(i) for i in self.interval_index(cont[: self.p]))
        disc = tuple(subject.discrete) if self.use_discrete else ()
        return (disc, idx)

    def keys(self, seq: ArrivalSequence) -> list[CellKey]:
        X = seq.X
        self._check_width(X)
        idx = self.interval_index(X[:, : self.p]).tolist()
        if self.use_discrete:
            disc = [tuple(r) for r in X[:, seq.space.p :].tolist()]
        else:
            disc = [()] * X.shape[0]
        return [(d, tuple(i)) for d, i in zip(disc, idx)]

    def cell_ids(self, X: np.ndarray, p_space: int | None = None) -> tuple[np.ndarray, int]:
        """Dense integer cell labels for the rows of ``X`` and their count.

        Only equality of labels is meaningful, not their order. ``p_space``
        is the number of continuous columns of ``X`` (defaults to ``self.p``).
        """
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        self._check_width(X)
        T = X.shape[0]
        if self.kind == "single":
            return np.zeros(T, dtype=np.int64), 1
        cols = []
        if self.p:
            cols.append(self.interval_index(X[:, : self.p]).astype(np.int64))
        if self.use_discrete:
            start = self.p if p_space is None else p_space
            D = X[:, start:]
            for j in range(D.shape[1]):
                _, inv = np.unique(D[:, j], return_inverse=True)
                cols.append(inv.reshape(-1, 1).astype(np.int64))
        if not cols:
            return np.zeros(T, dtype=np.int64), 1
        M = np.hstack(cols)
        _, inv = np.unique(M, axis=0, return_inverse=True)
        inv = inv.reshape(-1).astype(np.int64)
        return np.ascontiguousarray(inv), int(inv.max()) + 1

    def n_cells(self, space: CovariateSpace | None = None) -> int:
        """Total cell count of the partition (not just the occupied ones)."""
        n = self.K**self.p
        if self.use_discrete:
            if space is None:
                raise SeqBalanceError("cell count of a discrete partition needs the space")
            n *= math.prod(space.support_sizes)
        return n

    def describe(self) -> dict:
        return {"kind": self.kind, "p": self.p, "K": self.K, "use_discrete": self.use_discrete, **self.params}


def build_uniform_1d(T: int, eta: float) -> Partition:
    """``ceil(T**eta)`` equal intervals of the unit line."""
    _check_T(T)
    if not (0.0 < eta < 1.0):
        raise BadEta(f"eta must lie in (0, 1), got {eta}")
    K = _count(T**eta)
    return Partition("uniform_1d", p=1, K=K, params={"T": T, "eta": eta})


def build_grid(T: int, p: int, phi: float | None = None, c: float = 2.0) -> Partition:
    """Equal grid with ``ceil(T**phi / c**(1/p))`` intervals per dimension."""
    _check_T(T)
    if p < 1:
        raise SeqBalanceError(f"grid partition needs p >= 1, got {p}")
    phi = 1.0 / p if phi is None else float(phi)
    if not (0.0 < phi <= 1.0):
        raise BadPhi(f"phi must lie in (0, 1], got {phi}")
    if not c > 1.0:
        raise BadC(f"c must exceed 1, got {c}")
    K = _count(T**phi / c ** (1.0 / p))
    return Partition("grid", p=p, K=K, params={"T": T, "phi": phi, "c": c})


def build_natural_discrete(space: CovariateSpace) -> Partition:
    """One cell per tuple of discrete support values."""
    if space.p > 0:
        raise HasContinuous(f"natural cells need an all-discrete space, got p={space.p}")
    return Partition("natural", p=0, K=1, use_discrete=True)


def build_mixed(space: CovariateSpace, T: int, phi: float | None = None, c: float = 2.0) -> Partition:
    """Discrete support tuples crossed with a grid on the continuous part.

    With one continuous coordinate the grid is ``ceil(sqrt(T))`` intervals
    and ``phi``/``c`` are unused.
    """
    if space.p == 0:
        return build_natural_discrete(space)
    if space.p == 1:
        base = build_uniform_1d(T, 0.5)
    else:
        base = build_grid(T, space.p, phi, c)
    if space.q == 0:
        return base
    return Partition("mixed", p=space.p, K=base.K, use_discrete=True, params=dict(base.params))


def clustered_exponent(p: int, gamma_lb: float) -> float:
    return 1.0 / p + (p - 1) * gamma_lb / p


def build_clustered(T: int, p: int, gamma_lb: float, c: float = 2.0) -> Partition:
    """Grid tuned to clustered arrivals: ``ceil((T/c)**zeta)`` intervals per dimension."""
    _check_T(T)
    if p < 1:
        raise SeqBalanceError(f"clustered partition needs p >= 1, got {p}")
    if not gamma_lb > 0.0:
        raise BadGamma(f"gamma_lb must be positive, got {gamma_lb}")
    if not c > 1.0:
        raise BadC(f"c must exceed 1, got {c}")
    zeta = clustered_exponent(p, gamma_lb)
    K = _count((T / c) ** zeta)
    return Partition("clustered", p=p, K=K, params={"T": T, "gamma_lb": gamma_lb, "c": c, "zeta": zeta})


def build_partition(
    kind: str,
    space: CovariateSpace,
    T: int,
    eta: float = 0.5,
    phi: float | None = None,
    c: float = 2.0,
    gamma_lb: float | None = None,
) -> Partition:
    """Dispatch on a partition name (as used by configs and the CLI)."""
    kind = kind.replace("-", "_").lower()
    if kind in ("uniform1d", "uniform_1d"):
        return build_uniform_1d(T, eta)
    if kind == "grid":
        return build_grid(T, space.p, phi, c)
    if kind == "natural":
        return build_natural_discrete(space)
    if kind == "mixed":
        return build_mixed(space, T, phi, c)
    if kind == "clustered":
        if gamma_lb is None:
            raise BadGamma("clustered partition needs gamma_lb")
        return build_clustered(T, space.p, gamma_lb, c)
    if kind == "single":
        return Partition.single()
    raise SeqBalanceError(f"unknown partition {kind!r}")


# --- designs ----------------------------------------------------------------------


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def crd_assign(seq: ArrivalSequence, seed=None) -> AssignmentTrace:
    T = seq.T
    _check_T(T)
    control = _rng(seed).permutation(T)[: T // 2]
    w = np.full(T, TREATED, dtype=np.int8)
    w[control] = CONTROL
    return AssignmentTrace.from_labels(w)


def draw_coins(rng: np.random.Generator, T: int) -> np.ndarray:
    """One fair coin per period; consulted only on ties. 1 means treated."""
    return rng.integers(0, 2, size=T, dtype=np.uint8)


def pigeonhole_assign(
    seq: ArrivalSequence, partition: Partition, seed=None, record_cells: bool = False
) -> AssignmentTrace:
    T = seq.T
    _check_T(T)
    ids, n_cells = partition.cell_ids(seq.X, p_space=seq.space.p)
    coins = draw_coins(_rng(seed), T)
    w, tau = kernels.pigeonhole_run(ids, coins, n_cells)
    cells = tuple(partition.keys(seq)) if record_cells else None
    trace = AssignmentTrace.from_labels(w, cells)
    assert trace.tau == tau
    return trace


def single_pigeonhole_assign(seq: ArrivalSequence, seed=None) -> AssignmentTrace:
    return pigeonhole_assign(seq, Partition.single(), seed)


class PigeonholeState:
    """Online pigeonhole rule, one arrival at a time.

    Produces the same labels as :func:`pigeonhole_assign` for the same seed
    and checks cell balance before the stopping time on every step.
    """

    def __init__(self, partition: Partition, T: int, seed=None):
        _check_T(T)
        self.partition = partition
        self.T = T
        self.counts: dict[CellKey, list[int]] = {}
        self.totals = [0, 0]
        self.tau: int | None = None
        self._coins = draw_coins(_rng(seed), T).tolist()
        self._labels: list[int] = []

    @property
    def t(self) -> int:
        return len(self._labels)

    def assign(self, subject: Subject) -> int:
        t = self.t
        if t >= self.T:
            raise SeqBalanceError(f"budget of {self.T} arrivals exhausted")
        half = self.T // 2
        key = self.partition.key(subject)
        n = self.counts.setdefault(key, [0, 0])
        if self.totals[CONTROL] == half:
            lab = TREATED
        elif self.totals[TREATED] == half:
            lab = CONTROL
        elif n[CONTROL] < n[TREATED]:
            lab = CONTROL
        elif n[CONTROL] > n[TREATED]:
            lab = TREATED
        else:
            lab = self._coins[t]
        n[lab] += 1
        self.totals[lab] += 1
        self._labels.append(lab)
        if self.tau is None:
            assert abs(n[0] - n[1]) <= 1, f"cell {key} unbalanced before the stopping time"
            if max(self.totals) == half:
                self.tau = t + 1
        return lab

    def trace(self) -> AssignmentTrace:
        if self.t != self.T:
            raise SeqBalanceError(f"only {self.t} of {self.T} arrivals processed")
        return AssignmentTrace.from_labels(self._labels)


def matched_pairing(seq: ArrivalSequence, max_nodes: int = DEFAULT_MAX_NODES, approximate: bool = False) -> Matching:
    """Pairing used by the matched-pair design.

    With at most one continuous coordinate, subjects sharing a discrete
    tuple are sorted and paired in order; the (at most one per tuple)
    leftovers are paired optimally among themselves. All-discrete and
    multi-dimensional inputs use the general minimum-weight pairing.
    """
    X, space = seq.X, seq.space
    if space.p != 1:
        return min_weight_pairing(X, max_nodes=max_nodes, approximate=approximate)
    if space.q == 0:
        return min_weight_pairing(X)
    _, groups = np.unique(X[:, 1:], axis=0, return_inverse=True)
    groups = groups.reshape(-1)
    order = np.lexsort((np.arange(seq.T), X[:, 0], groups))
    pairs = []
    leftovers = []
    g_sorted = groups[order]
    start = 0
    while start < len(order):
        stop = start
        while stop < len(order) and g_sorted[stop] == g_sorted[start]:
            stop += 1
        block = order[start:stop].tolist()
        for i in range(0, len(block) - 1, 2):
            pairs.append(tuple(sorted((block[i], block[i + 1]))))
        if len(block) % 2:
            leftovers.append(block[-1])
        start = stop
    exact = True
    if leftovers:
        L = np.array(leftovers, dtype=np.intp)
        sub = min_weight_pairing(X[L], max_nodes=max_nodes, approximate=approximate)
        exact = sub.exact
        pairs.extend(tuple(sorted((int(L[i]), int(L[j])))) for i, j in sub.pairs)
    pairs.sort()
    return Matching(tuple(pairs), pair_cost(X, X, pairs), exact)


def pairing_is_globally_optimal(space: CovariateSpace) -> bool:
    """True when :func:`matched_pairing` returns a minimum-weight pairing.

    In that case its cost is also the discrepancy of every split that
    separates each pair.
    """
    return space.p != 1 or space.q == 0


def matched_pair_assign(
    seq: ArrivalSequence, seed=None, pairing: Matching | None = None
) -> tuple[AssignmentTrace, Matching]:
    """Pair the whole sequence, then flip one coin per pair.

    A precomputed ``pairing`` may be passed to avoid re-solving when the
    same sequence is assigned repeatedly.
    """
    _check_T(seq.T)
    if pairing is None:
        pairing = matched_pairing(seq)
    coins = _rng(seed).integers(0, 2, size=len(pairing.pairs), dtype=np.int8)
    w = np.empty(seq.T, dtype=np.int8)
    idx = np.asarray(pairing.pairs, dtype=np.intp)
    w[idx[:, 0]] = coins
    w[idx[:, 1]] = 1 - coins
    return AssignmentTrace.from_labels(w), pairing


DESIGNS = ("crd", "pigeonhole", "single", "matchedpair")


def assign(design: str, seq: ArrivalSequence, seed=None, partition: Partition | None = None) -> AssignmentTrace:
    """Run a design by name. ``partition`` is required for ``pigeonhole``."""
    if design == "crd":
        return crd_assign(seq, seed)
    if design == "pigeonhole":
        if partition is None:
            raise SeqBalanceError("pigeonhole design needs a partition")
        return pigeonhole_assign(seq, partition, seed)
    if design == "single":
        return single_pigeonhole_assign(seq, seed)
    if design == "matchedpair":
        return matched_pair_assign(seq, seed)[0]
    raise SeqBalanceError(f"unknown design {design!r}")


def format_cell_key(key: CellKey) -> str:
    disc, idx = key
    parts = []
    if disc:
        parts.append("d=" + "/".join(repr(v) for v in disc))
    if idx:
        parts.append("i=" + "/".join(str(i) for i in idx))
    return ";".join(parts) if parts else "all"


def write_trace_csv(trace: AssignmentTrace, keys=None, preamble=()) -> str:
    """``t,w,cell_key`` rows with 1-based ``t`` and ``w`` in {0, 1}."""
    buf = io.StringIO()
    for line in preamble:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "w", "cell_key"])
    for t, lab in enumerate(trace.w.tolist()):
        writer.writerow([t + 1, lab, format_cell_key(keys[t]) if keys is not None else ""])
    return buf.getvalue()
