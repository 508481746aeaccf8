"""Domain types: covariate spaces, subjects, arrival sequences, assignment traces.

Covariates live in the unit cube. A space has ``p`` continuous coordinates
(anything in [0, 1]) followed by ``q`` discrete coordinates, each restricted
to a finite, user-chosen set of reals in [0, 1]. Internally a sequence is a
read-only ``(T, p + q)`` float64 array; :class:`Subject` objects are built on
demand for the public API.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import OddHorizon, OutOfRange, SeqBalanceError, SpaceMismatch, UnknownSupport

CONTROL = 0
TREATED = 1


@dataclass(frozen=True)
class CovariateSpace:
    p: int
    q: int = 0
    discrete_supports: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self):
        supports = tuple(tuple(float(v) for v in s) for s in self.discrete_supports)
        object.__setattr__(self, "discrete_supports", supports)
        if self.p < 0 or self.q < 0 or self.p + self.q < 1:
            raise SeqBalanceError(f"need p >= 0, q >= 0, p + q >= 1; got p={self.p}, q={self.q}")
        if len(supports) != self.q:
            raise SeqBalanceError(f"expected {self.q} discrete supports, got {len(supports)}")
        for i, s in enumerate(supports):
            if len(s) < 1:
                raise SeqBalanceError(f"discrete dimension {i} has an empty support", index=i)
            if len(set(s)) != len(s):
                raise SeqBalanceError(f"discrete dimension {i} has repeated support values", index=i)
            if any(not (0.0 <= v <= 1.0) for v in s):
                raise OutOfRange(f"discrete dimension {i} has a support value outside [0, 1]", index=i)

    @classmethod
    def continuous(cls, p: int) -> "CovariateSpace":
        return cls(p=p)

    @classmethod
    def binary(cls, q: int, p: int = 0) -> "CovariateSpace":
        return cls(p=p, q=q, discrete_supports=((0.0, 1.0),) * q)

    @property
    def dim(self) -> int:
        return self.p + self.q

    @property
    def support_sizes(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.discrete_supports)


@dataclass(frozen=True)
class Subject:
    continuous: tuple[float, ...] = ()
    discrete: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "continuous", tuple(float(v) for v in self.continuous))
        object.__setattr__(self, "discrete", tuple(float(v) for v in self.discrete))

    @property
    def coords(self) -> tuple[float, ...]:
        return self.continuous + self.discrete

    @classmethod
    def from_coords(cls, coords: Sequence[float], space: CovariateSpace) -> "Subject":
        coords = tuple(float(v) for v in coords)
        if len(coords) != space.dim:
            raise SpaceMismatch(f"subject has {len(coords)} coordinates, space has {space.dim}")
        return cls(coords[: space.p], coords[space.p :])


def l2_distance(a: Subject, b: Subject) -> float:
    """Euclidean distance over all continuous and discrete coordinates."""
    if len(a.continuous) != len(b.continuous) or len(a.discrete) != len(b.discrete):
        raise SpaceMismatch("subjects come from different covariate spaces")
    return math.hypot(*(x - y for x, y in zip(a.coords, b.coords)))


class ArrivalSequence:
    """An ordered, immutable list of ``T`` subjects in a covariate space.

    Construction validates by default; pass ``check=False`` to build an
    unchecked sequence (then :func:`validate_sequence` reports problems).
    """

    __slots__ = ("space", "X")

    def __init__(self, space: CovariateSpace, X, check: bool = True):
        arr = np.array(X, dtype=np.float64, copy=True)
        if arr.ndim == 1 and space.dim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[1] != space.dim:
            raise SpaceMismatch(f"array of shape {arr.shape} does not fit a space of dimension {space.dim}")
        arr.flags.writeable = False
        self.space = space
        self.X = arr
        if check:
            validate_sequence(self)

    @classmethod
    def from_subjects(cls, space: CovariateSpace, subjects: Iterable[Subject], check: bool = True):
        rows = []
        for i, s in enumerate(subjects):
            if len(s.continuous) != space.p or len(s.discrete) != space.q:
                raise SpaceMismatch(f"subject {i} does not match the space", index=i)
            rows.append(s.coords)
        return cls(space, np.array(rows, dtype=np.float64).reshape(len(rows), space.dim), check=check)

    @property
    def T(self) -> int:
        return self.X.shape[0]

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, t: int) -> Subject:
        row = self.X[t]
        return Subject(tuple(row[: self.space.p]), tuple(row[self.space.p :]))

    @property
    def subjects(self) -> list[Subject]:
        return [self[t] for t in range(len(self))]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ArrivalSequence):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.X, other.X)

    def __repr__(self) -> str:
        return f"ArrivalSequence(T={self.T}, p={self.space.p}, q={self.space.q})"


def validate_sequence(seq: ArrivalSequence) -> None:
    """Raise the first violated invariant of ``seq``; return ``None`` if valid."""
    space, X = seq.space, seq.X
    T = X.shape[0]
    if T < 2 or T % 2:
        raise OddHorizon(f"horizon T={T} must be even and at least 2")
    bad = ~((X >= 0.0) & (X <= 1.0))
    if bad.any():
        t, j = np.argwhere(bad)[0]
        raise OutOfRange(f"subject {t} coordinate {j} = {X[t, j]!r} is outside [0, 1]", index=int(t))
    for i, support in enumerate(space.discrete_supports):
        col = X[:, space.p + i]
        ok = np.isin(col, np.array(support))
        if not ok.all():
            t = int(np.argmin(ok))
            raise UnknownSupport(
                f"subject {t} discrete coordinate {i} = {col[t]!r} is not in {support}", index=t
            )


@dataclass(frozen=True)
class AssignmentTrace:
    """Labels ``w`` (0 control, 1 treated) with the stopping time ``tau``.

    ``tau`` is 1-based: the first period after which either group holds
    ``T/2`` subjects. ``cells`` optionally records the pigeonhole key used
    at each period.
    """

    w: np.ndarray
    tau: int
    cells: tuple | None = field(default=None, compare=False)

    @classmethod
    def from_labels(cls, w, cells=None) -> "AssignmentTrace":
        w = np.asarray(w, dtype=np.int8).copy()
        w.flags.writeable = False
        T = w.shape[0]
        if T % 2 or T == 0:
            raise OddHorizon(f"trace length {T} must be even and positive")
        n1 = int(w.sum())
        if n1 * 2 != T or not np.isin(w, (0, 1)).all():
            raise SeqBalanceError(f"trace must hold exactly {T // 2} treated labels, got {n1}")
        return cls(w, stopping_time(w), cells)

    @property
    def T(self) -> int:
        return self.w.shape[0]

    @property
    def control(self) -> np.ndarray:
        return np.flatnonzero(self.w == CONTROL)

    @property
    def treated(self) -> np.ndarray:
        return np.flatnonzero(self.w == TREATED)

    def flipped(self) -> "AssignmentTrace":
        return AssignmentTrace.from_labels(1 - self.w, self.cells)


def stopping_time(w) -> int:
    w = np.asarray(w)
    half = w.shape[0] // 2
    n1 = np.cumsum(w == TREATED)
    n0 = np.arange(1, w.shape[0] + 1) - n1
    hit = np.flatnonzero((n0 == half) | (n1 == half))
    return int(hit[0]) + 1 if hit.size else w.shape[0]


# --- CSV --------------------------------------------------------------------


def header_for(space: CovariateSpace) -> list[str]:
    return [f"c{i + 1}" for i in range(space.p)] + [f"d{i + 1}" for i in range(space.q)]


def write_sequence_csv(seq: ArrivalSequence, path=None, preamble: Sequence[str] = ()) -> str:
    """Write one subject per row under a ``c1..cp,d1..dq`` header.

    Values use the shortest round-trip representation so discrete
    coordinates reload bit-identically. ``preamble`` lines are emitted
    first as ``# ...`` comments. Returns the text; writes it when ``path``
    is given.
    """
    buf = io.StringIO()
    for line in preamble:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header_for(seq.space))
    for row in seq.X:
        writer.writerow([repr(float(v)) for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_sequence_csv(source, space: CovariateSpace | None = None, check: bool = True) -> ArrivalSequence:
    """Parse the CSV format written by :func:`write_sequence_csv`.

    ``source`` is a path or an open text stream. Without an explicit space
    the discrete supports are taken to be the values observed per column.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = Path(source).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        raise SeqBalanceError("empty CSV")
    head = [h.strip() for h in rows[0]]
    p = sum(1 for h in head if h.startswith("c"))
    q = sum(1 for h in head if h.startswith("d"))
    if head != [f"c{i + 1}" for i in range(p)] + [f"d{i + 1}" for i in range(q)]:
        raise SeqBalanceError(f"unexpected header {head}; expected c1..cp,d1..dq")
    X = np.array([[float(v) for v in r] for r in rows[1:]], dtype=np.float64).reshape(len(rows) - 1, p + q)
    if space is None:
        supports = tuple(tuple(sorted(set(X[:, p + i].tolist()))) or (0.0,) for i in range(q))
        space = CovariateSpace(p=p, q=q, discrete_supports=supports)
    elif (space.p, space.q) != (p, q):
        raise SpaceMismatch(f"CSV has p={p}, q={q}; space has p={space.p}, q={space.q}")
    return ArrivalSequence(space, X, check=check)


def as_points(items, dim: int | None = None) -> np.ndarray:
    """Coerce subjects, an :class:`ArrivalSequence`, or an array to an ``(n, d)`` array."""
    if isinstance(items, ArrivalSequence):
        return items.X
    if isinstance(items, np.ndarray):
        arr = items.astype(np.float64, copy=False)
    else:
        items = list(items)
        if items and isinstance(items[0], Subject):
            width = {len(s.coords) for s in items}
            if len(width) > 1:
                raise SpaceMismatch("subjects come from different covariate spaces")
            arr = np.array([s.coords for s in items], dtype=np.float64)
        else:
            arr = np.array(items, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim in (None, 1) else arr.reshape(-1, dim)
    if arr.ndim != 2:
        raise SpaceMismatch(f"cannot interpret input of shape {arr.shape} as points")
    return arr
