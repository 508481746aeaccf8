import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from seqbalance.core import ArrivalSequence, CovariateSpace
from seqbalance.designs import Partition
from seqbalance.errors import DegenerateInput, TooLarge
from seqbalance.harness import (
    DesignSpec,
    InstanceSpec,
    binomial_mad,
    binomial_mad_asymptotic,
    crd_halfzero_asymptotic,
    crd_halfzero_binomial_model,
    crd_halfzero_exact,
    exact_expected_discrepancy,
    fit_rate,
    replication_seeds,
    run_mc,
)

TOL = 1e-9


def line(*xs):
    return ArrivalSequence(CovariateSpace.continuous(1), list(xs))


def test_small_exact_expectations(four_points, zeros_then_ones):
    assert exact_expected_discrepancy("crd", four_points) == pytest.approx(0.7, abs=TOL)
    assert exact_expected_discrepancy("matchedpair", four_points) == pytest.approx(0.5, abs=TOL)
    pig = DesignSpec("pigeonhole", partition="uniform1d", eta=0.5)
    assert exact_expected_discrepancy(pig, four_points) == pytest.approx(0.5, abs=TOL)
    assert exact_expected_discrepancy("single", zeros_then_ones) == pytest.approx(0.0, abs=TOL)
    assert exact_expected_discrepancy("crd", zeros_then_ones) == pytest.approx(2 / 3, abs=TOL)


def test_enumeration_guards():
    seq = ArrivalSequence(CovariateSpace.continuous(1), np.linspace(0, 1, 10))
    with pytest.raises(TooLarge):
        exact_expected_discrepancy("crd", seq)


def test_crd_halfzero_oracles_agree_with_enumeration():
    for T in (2, 4, 6, 8):
        seq = ArrivalSequence(CovariateSpace.continuous(1), np.repeat([0.0, 1.0], T // 2))
        assert crd_halfzero_exact(T) == pytest.approx(exact_expected_discrepancy("crd", seq), abs=TOL)
    assert crd_halfzero_binomial_model(4) == pytest.approx(1.0, abs=TOL)


def test_binomial_mad():
    # E|X - 1| for X ~ Bin(2, 1/2) is 1/2
    assert binomial_mad(2, 0.5) == pytest.approx(0.5, abs=TOL)
    assert binomial_mad(400, 0.5) == pytest.approx(binomial_mad_asymptotic(400, 0.5), rel=2e-3)
    assert crd_halfzero_binomial_model(800) == pytest.approx(crd_halfzero_asymptotic(800), rel=2e-3)


def test_fit_rate_recovers_power_law():
    Ts = [16, 64, 256, 1024]
    fit = fit_rate(Ts, [3.0 * T**0.25 for T in Ts])
    assert fit.slope == pytest.approx(0.25, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0)
    assert fit.predict(4096) == pytest.approx(3.0 * 8, rel=1e-12)
    with pytest.raises(DegenerateInput):
        fit_rate([16, 64, 256], [1, 2, 3])
    with pytest.raises(DegenerateInput):
        fit_rate(Ts, [1, 2, 0, 3])


def test_replication_seeds_are_distinct():
    seen = {tuple(s.generate_state(2)) for r in range(50) for s in replication_seeds(1, 64, r)}
    assert len(seen) == 100


def test_run_mc_deterministic_and_parallel_invariant():
    d, inst = DesignSpec("crd"), InstanceSpec("uniform", p=2)
    a = run_mc(d, inst, [8, 16], 12, seed=3)
    b = run_mc(d, inst, [8, 16], 12, seed=3, jobs=2)
    assert a.means == b.means
    assert a.rows[0].values == b.rows[0].values


def test_run_mc_matches_exact_oracle(four_points):
    rep = run_mc(DesignSpec("crd"), InstanceSpec.fixed(four_points), [4], 4000, seed=1)
    row = rep.rows[0]
    assert abs(row.mean - 0.7) < 4 * row.std / math.sqrt(row.R)


def test_report_formats():
    rep = run_mc(DesignSpec("single"), InstanceSpec("halfzero"), [4, 8], 5, seed=0)
    lines = rep.to_csv(preamble=["x"]).splitlines()
    assert lines[0] == "# x"
    assert lines[1] == "design,instance,T,R,mean,std,ci,mean_tau"
    assert lines[2].startswith("single,halfzero,4,5,")
    doc = json.loads(rep.to_json())
    assert [r["T"] for r in doc["rows"]] == [4, 8]
    assert doc["config"]["R"] == 5


def test_single_cell_on_halfzero_is_zero():
    rep = run_mc(DesignSpec("single"), InstanceSpec("halfzero"), [4, 16, 64], 20, seed=0)
    assert rep.means == [0.0, 0.0, 0.0]


def test_matched_pair_on_grid_is_deterministic():
    rep = run_mc(DesignSpec("matchedpair"), InstanceSpec("grid", p=2), [16, 64], 5, seed=0)
    assert [r.std for r in rep.rows] == [0.0, 0.0]
    assert rep.means == pytest.approx([2.0, 4.0], abs=TOL)


binary_seq = st.sampled_from([4, 6]).flatmap(
    lambda T: st.lists(st.sampled_from([0.0, 1.0]), min_size=T, max_size=T)
)


@given(binary_seq, st.randoms(use_true_random=False))
def test_crd_expectation_is_permutation_invariant(xs, rnd):
    ys = list(xs)
    rnd.shuffle(ys)
    assert exact_expected_discrepancy("crd", line(*xs)) == pytest.approx(
        exact_expected_discrepancy("crd", line(*ys)), abs=TOL
    )


def crd_by_ones(T):
    return [exact_expected_discrepancy("crd", line(*([0.0] * (T - k) + [1.0] * k))) for k in range(T + 1)]


def test_halfzero_is_worst_binary_multiset_for_crd_at_six():
    vals = crd_by_ones(6)
    assert vals == pytest.approx([0.0, 1.0, 0.8, 1.2, 0.8, 1.0, 0.0], abs=TOL)
    assert max(vals) == vals[3]


def test_single_one_beats_halfzero_for_crd_at_four():
    # (0,0,0,1) costs 1 under every split while the balanced multiset averages 2/3
    assert crd_by_ones(4) == pytest.approx([0.0, 1.0, 2 / 3, 1.0, 0.0], abs=TOL)


def test_exact_pigeonhole_with_explicit_partition():
    seq = line(0.1, 0.2, 0.6, 0.7)
    assert exact_expected_discrepancy("pigeonhole", seq, Partition.uniform(2)) == pytest.approx(0.2, abs=TOL)
