"""Average-treatment-effect simulation on a synthetic binary-covariate population.

A population is drawn once: binary covariates, a linear click-probability
model for control, a nonnegative uniform lift for treatment, then one
Bernoulli outcome per arm and subject. Designs are compared by the spread
of the difference-in-means estimate over repeated assignments of that
fixed population.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import CONTROL, TREATED, ArrivalSequence, AssignmentTrace, CovariateSpace
from .designs import build_natural_discrete, crd_assign, draw_coins
from .errors import BadConfig, LengthMismatch
from . import kernels

ATE_DESIGNS = ("pigeonhole", "crd")
MIN_ATE_R = 100


@dataclass(frozen=True)
class DgpConfig:
    """Synthetic population parameters.

    ``marginals`` is a single Bernoulli rate or one per covariate. When
    ``coefficients`` is not given they are drawn as ``coef_scale * N(0, 1)``
    from the population seed. The ``boost_top_k`` largest in magnitude are
    then multiplied by ``boost_factor``. ``noise_upper`` defaults to the
    realized mean control probability.
    """

    T: int = 10_000
    d: int = 16
    marginals: float | tuple[float, ...] = 0.5
    coefficients: tuple[float, ...] | None = None
    intercept: float = 0.05
    coef_scale: float = 1.0
    boost_top_k: int = 5
    boost_factor: float = 3.0
    noise_upper: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.T < 2 or self.T % 2:
            raise BadConfig(f"T must be even and at least 2, got {self.T}")
        if self.d < 1:
            raise BadConfig(f"need d >= 1, got {self.d}")
        m = self.marginal_vector()
        if m.shape != (self.d,) or np.any((m < 0) | (m > 1)):
            raise BadConfig("marginals must be one rate or d rates in [0, 1]")
        if self.coefficients is not None and len(self.coefficients) != self.d:
            raise BadConfig(f"expected {self.d} coefficients, got {len(self.coefficients)}")
        if not (0 <= self.boost_top_k <= self.d):
            raise BadConfig(f"boost_top_k must lie in [0, d], got {self.boost_top_k}")
        if self.noise_upper is not None and self.noise_upper < 0:
            raise BadConfig("noise_upper must be nonnegative")

    def marginal_vector(self) -> np.ndarray:
        m = np.atleast_1d(np.asarray(self.marginals, dtype=np.float64))
        return np.full(self.d, m[0]) if m.shape == (1,) else m


@dataclass(frozen=True)
class PotentialOutcomes:
    p0: np.ndarray
    p1: np.ndarray
    y0: np.ndarray
    y1: np.ndarray
    coefficients: np.ndarray

    @property
    def T(self) -> int:
        return self.y0.shape[0]

    @property
    def tau(self) -> float:
        return (math.fsum(self.y1.tolist()) - math.fsum(self.y0.tolist())) / self.T

    def head(self, n: int) -> "PotentialOutcomes":
        return PotentialOutcomes(self.p0[:n], self.p1[:n], self.y0[:n], self.y1[:n], self.coefficients)


def boosted_coefficients(cfg: DgpConfig, rng: np.random.Generator) -> np.ndarray:
    if cfg.coefficients is not None:
        beta = np.array(cfg.coefficients, dtype=np.float64)
    else:
        beta = cfg.coef_scale * rng.standard_normal(cfg.d)
    if cfg.boost_top_k:
        top = np.argsort(-np.abs(beta), kind="stable")[: cfg.boost_top_k]
        beta[top] *= cfg.boost_factor
    return beta


def generate_population(cfg: DgpConfig) -> tuple[ArrivalSequence, PotentialOutcomes]:
    rng = np.random.default_rng(cfg.seed)
    beta = boosted_coefficients(cfg, rng)
    X = (rng.random((cfg.T, cfg.d)) < cfg.marginal_vector()).astype(np.float64)
    p0 = np.clip(cfg.intercept + X @ beta, 0.0, 1.0)
    upper = float(p0.mean()) if cfg.noise_upper is None else cfg.noise_upper
    p1 = np.clip(p0 + rng.uniform(0.0, upper, size=cfg.T), 0.0, 1.0)
    y0 = (rng.random(cfg.T) < p0).astype(np.int8)
    y1 = (rng.random(cfg.T) < p1).astype(np.int8)
    seq = ArrivalSequence(CovariateSpace.binary(cfg.d), X, check=False)
    return seq, PotentialOutcomes(p0, p1, y0, y1, beta)


def diff_in_means(trace: AssignmentTrace | np.ndarray, table: PotentialOutcomes) -> float:
    """``(2/T) * (treated outcome sum - control outcome sum)``."""
    w = trace.w if isinstance(trace, AssignmentTrace) else np.asarray(trace)
    if w.shape[0] != table.T:
        raise LengthMismatch(f"trace has {w.shape[0]} labels, table has {table.T} rows")
    treated = int(table.y1[w == TREATED].sum())
    control = int(table.y0[w == CONTROL].sum())
    return 2.0 * (treated - control) / w.shape[0]


@dataclass(frozen=True)
class DesignStats:
    design: str
    R: int
    mean: float
    var: float
    samples: tuple = field(default=(), repr=False, compare=False)

    @property
    def se_mean(self) -> float:
        return math.sqrt(self.var / self.R)


@dataclass(frozen=True)
class AteReport:
    tau: float
    stats: dict
    reduction: float
    """``1 - var(pigeonhole) / var(crd)``."""
    log_ratio_z: float
    """``ln(var_crd / var_pigeonhole)`` over its large-sample standard error."""
    config: dict = field(default_factory=dict)

    def unbiased(self, design: str, k: float = 3.0) -> bool:
        s = self.stats[design]
        return abs(s.mean - self.tau) < k * s.se_mean

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "tau": self.tau,
            "reduction": self.reduction,
            "log_ratio_z": self.log_ratio_z,
            "designs": {k: {"R": s.R, "mean": s.mean, "var": s.var} for k, s in self.stats.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def samples_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["design", "rep", "tau_hat"])
        for name, s in self.stats.items():
            for r, v in enumerate(s.samples):
                writer.writerow([name, r, format(v, ".12g")])
        return buf.getvalue()


def _estimates(design: str, seq: ArrivalSequence, table: PotentialOutcomes, R: int, seed: int) -> list[float]:
    T = seq.T
    out = []
    if design == "pigeonhole":
        cells, n_cells = build_natural_discrete(seq.space).cell_ids(seq.X)
    for r in range(R):
        ss = np.random.SeedSequence([int(seed), ATE_DESIGNS.index(design), r])
        if design == "pigeonhole":
            w, _ = kernels.pigeonhole_run(cells, draw_coins(np.random.default_rng(ss), T), n_cells)
        else:
            w = crd_assign(seq, ss).w
        out.append(diff_in_means(w, table))
    return out


def _stats(design: str, vals: list[float]) -> DesignStats:
    R = len(vals)
    mean = math.fsum(vals) / R
    var = math.fsum((v - mean) ** 2 for v in vals) / (R - 1)
    return DesignStats(design, R, mean, var, tuple(vals))


def ate_study(cfg: DgpConfig, R: int = 2000, seed: int = 0, designs=ATE_DESIGNS, keep_samples: bool = True) -> AteReport:
    """Estimate the ATE ``R`` times per design on one fixed population.

    The pigeonhole design uses one cell per covariate pattern.
    """
    if R < MIN_ATE_R:
        raise BadConfig(f"need R >= {MIN_ATE_R}, got {R}")
    for name in designs:
        if name not in ATE_DESIGNS:
            raise BadConfig(f"unknown design {name!r} for the ATE study")
    seq, table = generate_population(cfg)
    stats = {}
    for name in designs:
        s = _stats(name, _estimates(name, seq, table, R, seed))
        stats[name] = s if keep_samples else DesignStats(s.design, s.R, s.mean, s.var)
    reduction = z = float("nan")
    if "pigeonhole" in stats and "crd" in stats:
        vp, vc = stats["pigeonhole"].var, stats["crd"].var
        reduction = 1.0 - vp / vc
        se = math.sqrt(2.0 / (stats["pigeonhole"].R - 1) + 2.0 / (stats["crd"].R - 1))
        z = math.log(vc / vp) / se
    config = {"dgp": {k: v for k, v in asdict(cfg).items()}, "R": R, "seed": seed}
    return AteReport(table.tau, stats, reduction, z, config)


@dataclass(frozen=True)
class SweepResult:
    Ts: tuple[int, ...]
    pigeonhole_var: tuple[float, ...]
    crd_var: float
    crossing_T: float | None
    """Smallest horizon at which pigeonhole variance reaches the CRD level,
    interpolated linearly between grid points; ``None`` if it never does."""


def sample_size_sweep(
    cfg: DgpConfig, R: int = 2000, seed: int = 0, fractions=tuple(np.linspace(0.8, 1.0, 11))
) -> SweepResult:
    """Pigeonhole variance on the first ``T'`` subjects against CRD at full ``T``."""
    seq, table = generate_population(cfg)
    crd_var = _stats("crd", _estimates("crd", seq, table, R, seed)).var
    Ts, vars_ = [], []
    for f in fractions:
        Tp = max(2, int(round(f * cfg.T / 2)) * 2)
        sub = ArrivalSequence(seq.space, seq.X[:Tp], check=False)
        vals = _estimates("pigeonhole", sub, table.head(Tp), R, seed)
        Ts.append(Tp)
        vars_.append(_stats("pigeonhole", vals).var)
    crossing = None
    for i, (Tp, v) in enumerate(zip(Ts, vars_)):
        if v <= crd_var:
            if i == 0:
                crossing = float(Tp)
            else:
                T0, v0 = Ts[i - 1], vars_[i - 1]
                crossing = T0 + (v0 - crd_var) / (v0 - v) * (Tp - T0)
            break
    return SweepResult(tuple(Ts), tuple(vars_), crd_var, crossing)
