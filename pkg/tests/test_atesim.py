import numpy as np
import pytest

from seqbalance.atesim import (
    DgpConfig,
    PotentialOutcomes,
    ate_study,
    boosted_coefficients,
    diff_in_means,
    generate_population,
    sample_size_sweep,
)
from seqbalance.core import AssignmentTrace
from seqbalance.errors import BadConfig, LengthMismatch


def table(y0, y1):
    y0, y1 = np.array(y0, dtype=np.int8), np.array(y1, dtype=np.int8)
    return PotentialOutcomes(y0.astype(float), y1.astype(float), y0, y1, np.zeros(1))


def test_diff_in_means_examples():
    w = AssignmentTrace.from_labels([1, 0, 1, 0])
    assert diff_in_means(w, table([0, 0, 0, 0], [1, 1, 0, 0])) == pytest.approx(0.5)
    assert diff_in_means(w, table([1, 1, 1, 1], [1, 1, 1, 1])) == 0.0
    assert diff_in_means(w, table([0, 0, 0, 0], [1, 1, 1, 1])) == 1.0
    with pytest.raises(LengthMismatch):
        diff_in_means(w, table([0, 0], [1, 1]))


def test_constant_model_and_trimming():
    _, pop = generate_population(DgpConfig(T=100, d=3, coefficients=(0.0, 0.0, 0.0), boost_top_k=0, noise_upper=0.0))
    assert np.all(pop.p0 == 0.05) and np.all(pop.p1 == 0.05)
    _, pop = generate_population(DgpConfig(T=100, d=1, marginals=1.0, coefficients=(1.15,), boost_top_k=0))
    assert np.all(pop.p0 == 1.0)


def test_boost_magnifies_largest_coefficients():
    cfg = DgpConfig(T=10, d=4, coefficients=(0.1, -0.5, 0.2, 0.3), boost_top_k=2, boost_factor=10.0)
    beta = boosted_coefficients(cfg, np.random.default_rng(0))
    assert beta.tolist() == pytest.approx([0.1, -5.0, 0.2, 3.0])


def test_population_is_fixed_by_seed_and_tau_nonnegative_in_expectation():
    cfg = DgpConfig(T=2000, d=16, seed=9)
    a, pa = generate_population(cfg)
    b, pb = generate_population(cfg)
    assert a == b and np.array_equal(pa.y1, pb.y1)
    assert np.all(pa.p1 >= pa.p0)


def test_config_validation():
    with pytest.raises(BadConfig):
        DgpConfig(T=11)
    with pytest.raises(BadConfig):
        DgpConfig(d=2, marginals=(0.5, 0.5, 0.5))
    with pytest.raises(BadConfig):
        DgpConfig(d=2, boost_top_k=3)
    with pytest.raises(BadConfig):
        ate_study(DgpConfig(T=100, d=2), R=50)


def test_study_report_fields():
    rep = ate_study(DgpConfig(T=400, d=4, boost_top_k=2, seed=1), R=200, seed=2)
    assert set(rep.stats) == {"pigeonhole", "crd"}
    assert all(s.var >= 0 and s.R == 200 for s in rep.stats.values())
    assert rep.reduction == pytest.approx(1 - rep.stats["pigeonhole"].var / rep.stats["crd"].var)
    assert rep.samples_csv().splitlines()[0] == "design,rep,tau_hat"
    assert len(rep.samples_csv().splitlines()) == 401


def test_no_signal_means_no_reduction():
    cfg = DgpConfig(T=400, d=4, coefficients=(0.0,) * 4, boost_top_k=0, intercept=0.3, seed=3)
    rep = ate_study(cfg, R=1000, seed=4)
    assert abs(rep.log_ratio_z) < 3.5


def test_sweep_shapes():
    res = sample_size_sweep(DgpConfig(T=400, d=4, boost_top_k=2, seed=1), R=100, seed=0, fractions=(0.8, 0.9, 1.0))
    assert res.Ts == (320, 360, 400)
    assert len(res.pigeonhole_var) == 3
