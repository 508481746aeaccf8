import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from seqbalance.core import ArrivalSequence, CovariateSpace
from seqbalance.designs import (
    Partition,
    PigeonholeState,
    assign,
    build_clustered,
    build_grid,
    build_mixed,
    build_natural_discrete,
    build_partition,
    build_uniform_1d,
    clustered_exponent,
    crd_assign,
    format_cell_key,
    matched_pair_assign,
    matched_pairing,
    pigeonhole_assign,
    write_trace_csv,
)
from seqbalance.errors import BadC, BadEta, BadGamma, BadPhi, HasContinuous, OddHorizon
from seqbalance.matching import discrepancy_cost, min_weight_pairing


@pytest.mark.parametrize("T,eta,K", [(16, 0.5, 4), (100, 0.5, 10), (10, 0.5, 4)])
def test_uniform_cell_counts(T, eta, K):
    assert build_uniform_1d(T, eta).K == K


def test_grid_cell_counts():
    assert build_grid(16, 2, 0.5, 1 + 1e-9).K == 4
    assert build_grid(16, 2, 0.5, 2.0).K == 3
    assert build_grid(16, 2).n_cells() == 9


def test_clustered_cell_count():
    assert clustered_exponent(2, 0.8) == pytest.approx(0.9)
    part = build_clustered(4096, 2, 0.8, 2.0)
    assert part.K == int(np.ceil(2048**0.9 * (1 - 1e-12)))


def test_natural_cells():
    assert build_natural_discrete(CovariateSpace.binary(2)).n_cells(CovariateSpace.binary(2)) == 4
    three = CovariateSpace(0, 1, ((0.0, 0.5, 1.0),))
    assert build_natural_discrete(three).n_cells(three) == 3
    with pytest.raises(HasContinuous):
        build_natural_discrete(CovariateSpace.binary(1, p=1))


def test_partition_errors():
    with pytest.raises(BadEta):
        build_uniform_1d(16, 1.0)
    with pytest.raises(BadPhi):
        build_grid(16, 2, phi=0.0)
    with pytest.raises(BadC):
        build_grid(16, 2, c=1.0)
    with pytest.raises(BadGamma):
        build_partition("clustered", CovariateSpace.continuous(2), 16)
    with pytest.raises(OddHorizon):
        build_uniform_1d(15, 0.5)


def test_cell_boundaries_are_half_open():
    part = Partition.uniform(4)
    idx = part.interval_index(np.array([0.0, 0.2499, 0.25, 0.5, 0.999, 1.0]))
    assert idx.tolist() == [0, 0, 1, 2, 3, 3]


@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=30), st.integers(1, 12))
def test_every_point_has_one_cell(xs, K):
    idx = Partition.uniform(K).interval_index(np.array(xs))
    assert np.all((idx >= 0) & (idx < K))
    for x, i in zip(xs, idx):
        assert i / K <= x and (x < (i + 1) / K or i == K - 1)


def test_mixed_partition_keys():
    space = CovariateSpace.binary(1, p=1)
    part = build_mixed(space, 16)
    assert part.use_discrete and part.K == 4
    seq = ArrivalSequence(space, [[0.1, 0.0], [0.1, 1.0]])
    keys = part.keys(seq)
    assert keys[0] != keys[1]
    assert format_cell_key(keys[0]) == "d=0.0;i=0"
    ids, n = part.cell_ids(seq.X, p_space=1)
    assert n == 2


def sequences(max_half=10, p=1):
    return st.integers(1, max_half).flatmap(
        lambda h: st.lists(
            st.lists(st.floats(0, 1, allow_nan=False), min_size=p, max_size=p), min_size=2 * h, max_size=2 * h
        )
    )


@given(sequences(), st.integers(0, 2**31), st.integers(1, 5))
def test_online_state_matches_batch_kernel(rows, seed, K):
    seq = ArrivalSequence(CovariateSpace.continuous(1), rows)
    part = Partition.uniform(K)
    batch = pigeonhole_assign(seq, part, seed)
    state = PigeonholeState(part, seq.T, seed)
    for s in seq.subjects:
        state.assign(s)
    online = state.trace()
    assert np.array_equal(online.w, batch.w) and online.tau == batch.tau


@given(sequences(p=2), st.integers(0, 2**31), st.sampled_from(["crd", "single", "pigeonhole", "matchedpair"]))
def test_half_half_constraint(rows, seed, design):
    seq = ArrivalSequence(CovariateSpace.continuous(2), rows)
    trace = assign(design, seq, seed, partition=Partition.uniform(2, p=2))
    assert trace.w.sum() * 2 == seq.T


@given(sequences(), st.integers(0, 2**31), st.integers(1, 4))
def test_pre_tau_cell_balance(rows, seed, K):
    seq = ArrivalSequence(CovariateSpace.continuous(1), rows)
    part = Partition.uniform(K)
    trace = pigeonhole_assign(seq, part, seed)
    ids, _ = part.cell_ids(seq.X)
    for cell in set(ids.tolist()):
        mask = ids[: trace.tau - 1] == cell
        # before tau every cell is balanced or off by one
        ones = int(trace.w[: trace.tau - 1][mask].sum())
        assert abs(2 * ones - int(mask.sum())) <= 1


def test_crd_draws_every_half_equally():
    seq = ArrivalSequence(CovariateSpace.continuous(1), [0.1, 0.2, 0.3, 0.4])
    counts = {}
    n = 6000
    for s in range(n):
        key = tuple(crd_assign(seq, s).w.tolist())
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 6
    for c in counts.values():
        assert abs(c - n / 6) < 4 * np.sqrt(n * (1 / 6) * (5 / 6))


def test_seeded_designs_are_deterministic():
    seq = ArrivalSequence(CovariateSpace.continuous(1), np.linspace(0, 1, 20))
    for design in ("crd", "single", "matchedpair"):
        assert np.array_equal(assign(design, seq, 7).w, assign(design, seq, 7).w)


def test_matched_pair_splits_every_pair():
    seq = ArrivalSequence(CovariateSpace.continuous(2), np.random.default_rng(1).random((12, 2)))
    trace, pairing = matched_pair_assign(seq, 3)
    for i, j in pairing.pairs:
        assert trace.w[i] != trace.w[j]
    split = discrepancy_cost(seq.X[trace.control], seq.X[trace.treated])
    assert split == pytest.approx(pairing.cost, abs=1e-9)


def test_matched_pairing_mixed_space_is_feasible():
    space = CovariateSpace.binary(2, p=1)
    rng = np.random.default_rng(4)
    X = np.hstack([rng.random((30, 1)), rng.integers(0, 2, (30, 2)).astype(float)])
    seq = ArrivalSequence(space, X)
    m = matched_pairing(seq)
    assert sorted(i for p in m.pairs for i in p) == list(range(30))
    assert m.cost >= min_weight_pairing(X).cost - 1e-9


def test_trace_csv():
    seq = ArrivalSequence(CovariateSpace.continuous(1), [0.1, 0.6])
    part = Partition.uniform(2)
    trace = pigeonhole_assign(seq, part, 0, record_cells=True)
    text = write_trace_csv(trace, trace.cells)
    lines = text.splitlines()
    assert lines[0] == "t,w,cell_key"
    assert lines[1].startswith("1,") and lines[1].endswith(",i=0")
    assert lines[2].endswith(",i=1")


def test_label_symmetry_of_pigeonhole():
    # complementing every coin complements every label
    seq = ArrivalSequence(CovariateSpace.continuous(1), np.linspace(0, 1, 10))
    from seqbalance import kernels

    ids, n = Partition.uniform(3).cell_ids(seq.X)
    for bits in itertools.islice(itertools.product((0, 1), repeat=10), 0, 1024, 37):
        coins = np.array(bits, dtype=np.uint8)
        w, tau = kernels.pigeonhole_run(ids, coins, n)
        w2, tau2 = kernels.pigeonhole_run(ids, 1 - coins, n)
        assert np.array_equal(w, 1 - w2) and tau == tau2
