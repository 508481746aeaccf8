"""Monte Carlo engine, exact enumeration oracles and power-law rate fits.

Replication ``r`` at horizon ``T`` draws everything from
``SeedSequence([seed, T, r])``: the first spawned child generates the
instance (when it is random), the second drives the design. Results are
therefore identical for any worker count or scheduling order.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import ArrivalSequence, CovariateSpace
from .designs import (
    DESIGNS,
    Partition,
    build_partition,
    crd_assign,
    matched_pair_assign,
    matched_pairing,
    pairing_is_globally_optimal,
    pigeonhole_assign,
)
from .errors import DegenerateInput, SeqBalanceError, TooLarge
from .instances import (
    INSTANCES,
    ClusterSpec,
    gen_alternating_lb,
    gen_clustered,
    gen_discrete_uniform,
    gen_grid,
    gen_halfzero_halfone,
    gen_uniform,
)
from .matching import Matching, discrepancy

CRD_ENUMERATION_MAX = 8
COIN_ENUMERATION_MAX = 12
MIN_REPORTED_R = 30
_PARTITIONED = ("pigeonhole",)


def fmt(x: float) -> str:
    """12 significant digits, the precision used in every report."""
    return format(float(x), ".12g")


@dataclass(frozen=True)
class DesignSpec:
    """A design name plus the partition parameters the pigeonhole rule needs."""

    name: str
    partition: str = "uniform1d"
    eta: float = 0.5
    phi: float | None = None
    c: float = 2.0
    gamma_lb: float | None = None

    def __post_init__(self):
        if self.name not in DESIGNS:
            raise SeqBalanceError(f"unknown design {self.name!r}; choose from {DESIGNS}")

    def build_partition(self, space: CovariateSpace, T: int) -> Partition | None:
        if self.name == "single":
            return Partition.single()
        if self.name != "pigeonhole":
            return None
        return build_partition(self.partition, space, T, self.eta, self.phi, self.c, self.gamma_lb)

    @property
    def label(self) -> str:
        if self.name == "pigeonhole":
            return f"pigeonhole[{self.partition}]"
        return self.name


@dataclass(frozen=True)
class InstanceSpec:
    """Which arrival sequence to generate at each horizon.

    ``kind`` is one of ``halfzero``, ``grid``, ``alternating``,
    ``clustered``, ``discrete``, ``uniform`` or ``fixed``. ``fixed`` replays
    ``sequence`` and ignores ``T``. Alternating instances use
    ``ceil(sqrt(T))`` cells unless ``K`` is set. Clustered instances draw
    fresh centers each replication unless ``centers`` is set.
    """

    kind: str
    p: int = 1
    q: int = 0
    K: int | None = None
    n_clusters: int = 5
    gamma: float = 0.8
    centers: tuple | None = None
    shuffle: bool = False
    sequence: ArrivalSequence | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in INSTANCES + ("fixed",):
            raise SeqBalanceError(f"unknown instance {self.kind!r}; choose from {INSTANCES}")
        if self.kind == "fixed" and self.sequence is None:
            raise SeqBalanceError("a fixed instance needs a sequence")

    @classmethod
    def fixed(cls, seq: ArrivalSequence) -> "InstanceSpec":
        return cls("fixed", p=seq.space.p, q=seq.space.q, sequence=seq)

    @property
    def is_random(self) -> bool:
        if self.kind in ("discrete", "uniform"):
            return True
        if self.kind == "clustered":
            return True
        return self.kind == "grid" and self.shuffle

    def cells_for(self, T: int) -> int:
        return self.K if self.K is not None else math.ceil(math.sqrt(T) * (1 - 1e-12))

    def generate(self, T: int, seed=None) -> ArrivalSequence:
        if self.kind == "fixed":
            return self.sequence
        if self.kind == "halfzero":
            return gen_halfzero_halfone(T)
        if self.kind == "grid":
            return gen_grid(T, self.p, seed if self.shuffle else None)
        if self.kind == "alternating":
            return gen_alternating_lb(T, self.cells_for(T))
        if self.kind == "clustered":
            rng = np.random.default_rng(seed)
            if self.centers is None:
                spec = ClusterSpec(rng.random((self.n_clusters, self.p)), self.gamma)
            else:
                spec = ClusterSpec(np.array(self.centers), self.gamma)
            return gen_clustered(T, spec, rng)
        if self.kind == "discrete":
            return gen_discrete_uniform(T, CovariateSpace.binary(self.q, p=self.p), seed)
        return gen_uniform(T, self.p, seed)

    @property
    def label(self) -> str:
        return self.kind


def design_discrepancy(
    design: DesignSpec,
    seq: ArrivalSequence,
    seed,
    partition: Partition | None = None,
    pairing: Matching | None = None,
) -> tuple[float, int]:
    """Run one design once and score it. Returns ``(discrepancy, tau)``."""
    if design.name == "matchedpair":
        trace, pairing = matched_pair_assign(seq, seed, pairing)
        if pairing_is_globally_optimal(seq.space) and pairing.exact:
            # every split of an optimal pairing has discrepancy equal to its cost
            return pairing.cost, trace.tau
    elif design.name == "crd":
        trace = crd_assign(seq, seed)
    else:
        if partition is None:
            partition = design.build_partition(seq.space, seq.T)
        trace = pigeonhole_assign(seq, partition, seed)
    X = seq.X
    cost = discrepancy(X[trace.control], X[trace.treated]).cost
    return cost, trace.tau


def replication_seeds(seed: int, T: int, rep: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    inst, dsgn = np.random.SeedSequence([int(seed), int(T), int(rep)]).spawn(2)
    return inst, dsgn


def _run_block(args) -> list[tuple[float, int]]:
    design, instance, T, reps, seed, fixed_seq, partition, pairing = args
    out = []
    for rep in reps:
        inst_seed, design_seed = replication_seeds(seed, T, rep)
        if fixed_seq is not None:
            seq, part, pair = fixed_seq, partition, pairing
        else:
            seq = instance.generate(T, inst_seed)
            part = design.build_partition(seq.space, T)
            pair = None
        out.append(design_discrepancy(design, seq, design_seed, part, pair))
    return out


@dataclass(frozen=True)
class McRow:
    design: str
    instance: str
    T: int
    R: int
    mean: float
    std: float
    ci: float
    mean_tau: float
    seed: int
    values: tuple = field(default=(), repr=False, compare=False)

    @property
    def max(self) -> float:
        return max(self.values)


CSV_COLUMNS = ("design", "instance", "T", "R", "mean", "std", "ci", "mean_tau")


@dataclass
class McReport:
    rows: list[McRow]
    config: dict = field(default_factory=dict)

    @property
    def Ts(self) -> list[int]:
        return [r.T for r in self.rows]

    @property
    def means(self) -> list[float]:
        return [r.mean for r in self.rows]

    def row(self, T: int) -> McRow:
        for r in self.rows:
            if r.T == T:
                return r
        raise KeyError(T)

    def to_csv(self, preamble=()) -> str:
        buf = io.StringIO()
        for line in preamble:
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow([r.design, r.instance, r.T, r.R, fmt(r.mean), fmt(r.std), fmt(r.ci), fmt(r.mean_tau)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        rows = []
        for r in self.rows:
            d = asdict(r)
            d.pop("values")
            rows.append(d)
        return {"config": self.config, "rows": rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def summarize(design: str, instance: str, T: int, seed: int, results) -> McRow:
    vals = [float(c) for c, _ in results]
    taus = [float(t) for _, t in results]
    R = len(vals)
    mean = math.fsum(vals) / R
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (R - 1)) if R > 1 else 0.0
    return McRow(
        design, instance, T, R, mean, std, 1.96 * std / math.sqrt(R), math.fsum(taus) / R, seed, tuple(vals)
    )


def run_mc(
    design: DesignSpec,
    instance: InstanceSpec,
    Ts,
    R: int,
    seed: int = 0,
    jobs: int = 1,
) -> McReport:
    """Mean discrepancy of ``design`` on ``instance`` for every horizon in ``Ts``."""
    if R < 1:
        raise SeqBalanceError(f"need R >= 1, got {R}")
    rows = []
    executor = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for T in Ts:
            fixed_seq = partition = pairing = None
            if not instance.is_random:
                fixed_seq = instance.generate(T)
                partition = design.build_partition(fixed_seq.space, fixed_seq.T)
                if design.name == "matchedpair":
                    pairing = matched_pairing(fixed_seq)
            T_eff = fixed_seq.T if fixed_seq is not None else T
            if executor is None:
                results = _run_block((design, instance, T_eff, range(R), seed, fixed_seq, partition, pairing))
            else:
                chunks = [range(a, min(R, a + max(1, R // (4 * jobs)))) for a in range(0, R, max(1, R // (4 * jobs)))]
                args = [(design, instance, T_eff, ch, seed, fixed_seq, partition, pairing) for ch in chunks]
                results = [x for block in executor.map(_run_block, args) for x in block]
            rows.append(summarize(design.label, instance.label, T_eff, seed, results))
    finally:
        if executor is not None:
            executor.shutdown()
    config = {"design": asdict(design), "instance": _instance_config(instance), "T": list(Ts), "R": R, "seed": seed}
    return McReport(rows, config)


def _instance_config(instance: InstanceSpec) -> dict:
    d = {k: v for k, v in asdict(instance).items() if k != "sequence"}
    return d


# --- exact oracles ------------------------------------------------------------------


def _cost(X: np.ndarray, w) -> float:
    w = np.asarray(w)
    return discrepancy(X[w == 0], X[w == 1]).cost


def _coin_branches(cells: list[int], T: int):
    """Yield ``(labels, probability)`` for every coin outcome of the pigeonhole rule."""
    half = T // 2

    def walk(t, c0, c1, n0, n1, labels, prob):
        if t == T:
            yield list(labels), prob
            return
        k = cells[t]
        a, b = c0.get(k, 0), c1.get(k, 0)
        if n0 == half:
            options, p = (1,), prob
        elif n1 == half:
            options, p = (0,), prob
        elif a < b:
            options, p = (0,), prob
        elif a > b:
            options, p = (1,), prob
        else:
            options, p = (0, 1), prob / 2
        for lab in options:
            (c1 if lab else c0)[k] = (b if lab else a) + 1
            labels.append(lab)
            yield from walk(t + 1, c0, c1, n0 + (lab == 0), n1 + (lab == 1), labels, p)
            labels.pop()
            (c1 if lab else c0)[k] = b if lab else a

    yield from walk(0, {}, {}, 0, 0, [], 1.0)


def exact_expected_discrepancy(design: DesignSpec | str, seq: ArrivalSequence, partition: Partition | None = None) -> float:
    """Expected discrepancy by enumerating every random outcome with its probability."""
    if isinstance(design, str):
        design = DesignSpec(design)
    T, X = seq.T, seq.X
    if design.name == "crd":
        if T > CRD_ENUMERATION_MAX:
            raise TooLarge(f"CRD enumeration limited to T <= {CRD_ENUMERATION_MAX}, got {T}")
        costs = []
        for ctrl in itertools.combinations(range(T), T // 2):
            w = np.ones(T, dtype=np.int8)
            w[list(ctrl)] = 0
            costs.append(_cost(X, w))
        return math.fsum(costs) / len(costs)
    if design.name == "matchedpair":
        pairing = matched_pairing(seq)
        if pairing_is_globally_optimal(seq.space):
            return pairing.cost
        if T > COIN_ENUMERATION_MAX:
            raise TooLarge(f"coin enumeration limited to T <= {COIN_ENUMERATION_MAX}, got {T}")
        idx = np.asarray(pairing.pairs)
        costs = []
        for flips in itertools.product((0, 1), repeat=len(pairing.pairs)):
            w = np.empty(T, dtype=np.int8)
            w[idx[:, 0]] = flips
            w[idx[:, 1]] = 1 - np.array(flips)
            costs.append(_cost(X, w))
        return math.fsum(costs) / len(costs)
    if T > COIN_ENUMERATION_MAX:
        raise TooLarge(f"coin enumeration limited to T <= {COIN_ENUMERATION_MAX}, got {T}")
    if partition is None:
        partition = design.build_partition(seq.space, T)
    cells, _ = partition.cell_ids(X, p_space=seq.space.p)
    terms = [prob * _cost(X, labels) for labels, prob in _coin_branches(cells.tolist(), T)]
    return math.fsum(terms)


def binomial_mad(n: int, prob: float) -> float:
    """Exact ``E|X - n*prob|`` for ``X ~ Binomial(n, prob)``."""
    if n < 1 or not (0.0 < prob < 1.0):
        raise SeqBalanceError(f"need n >= 1 and prob in (0, 1), got n={n}, prob={prob}")
    mu = n * prob
    lp, lq = math.log(prob), math.log1p(-prob)
    terms = []
    for k in range(n + 1):
        logpmf = math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1) + k * lp + (n - k) * lq
        terms.append(math.exp(logpmf) * abs(k - mu))
    return math.fsum(terms)


def binomial_mad_asymptotic(n: int, prob: float) -> float:
    return math.sqrt(2.0 * prob * (1.0 - prob) * n / math.pi)


def crd_halfzero_exact(T: int) -> float:
    """Exact expected CRD discrepancy on ``T/2`` zeros and ``T/2`` ones.

    The number ``H`` of zeros drawn into control is hypergeometric and the
    optimal matching leaves ``|T/2 - 2H|`` zero-one pairs, each of cost 1.
    """
    if T < 2 or T % 2:
        raise SeqBalanceError(f"T must be even, got {T}")
    half = T // 2
    log_total = math.lgamma(T + 1) - 2 * math.lgamma(half + 1)
    terms = []
    for h in range(half + 1):
        logp = 2 * (math.lgamma(half + 1) - math.lgamma(h + 1) - math.lgamma(half - h + 1)) - log_total
        terms.append(math.exp(logp) * abs(half - 2 * h))
    return math.fsum(terms)


def crd_halfzero_binomial_model(T: int) -> float:
    """Same quantity when ``H`` is modelled as ``Binomial(T/2, 1/2)`` instead."""
    return 2.0 * binomial_mad(T // 2, 0.5)


def crd_halfzero_asymptotic(T: int) -> float:
    """Leading term ``sqrt(T/pi)`` of the binomial model."""
    return math.sqrt(T / math.pi)


# --- rate fits ------------------------------------------------------------------------


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float
    n: int

    def predict(self, T: float) -> float:
        return math.exp(self.intercept) * T**self.slope


def fit_rate(report_or_Ts, means=None) -> RateFit:
    """Least-squares line through ``(ln T, ln mean)``."""
    if means is None:
        Ts, means = report_or_Ts.Ts, report_or_Ts.means
    else:
        Ts = report_or_Ts
    Ts = np.asarray(Ts, dtype=np.float64)
    y = np.asarray(means, dtype=np.float64)
    if len(np.unique(Ts)) < 4:
        raise DegenerateInput(f"need at least 4 distinct horizons, got {len(np.unique(Ts))}")
    if np.any(~(y > 0)):
        raise DegenerateInput("every mean must be positive to take logs")
    x = np.log(Ts)
    ly = np.log(y)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * x + intercept)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), r2, len(Ts))
