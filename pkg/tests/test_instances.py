import numpy as np
import pytest

from seqbalance.core import CovariateSpace
from seqbalance.errors import Indivisible, NotAPower, OddHorizon
from seqbalance.instances import (
    ClusterSpec,
    gen_alternating_lb,
    gen_clustered,
    gen_discrete_uniform,
    gen_grid,
    gen_halfzero_halfone,
    gen_uniform,
    grid_centers,
    integer_root,
)


def test_halfzero_halfone():
    assert gen_halfzero_halfone(4).X[:, 0].tolist() == [0.0, 0.0, 1.0, 1.0]
    with pytest.raises(OddHorizon):
        gen_halfzero_halfone(5)


def test_grid_one_point_per_cube():
    seq = gen_grid(16, 2)
    cells = np.floor(seq.X * 4).astype(int)
    assert len({tuple(c) for c in cells.tolist()}) == 16
    assert seq.X[0].tolist() == [0.125, 0.125]
    assert grid_centers(3, 2).shape == (9, 2)
    with pytest.raises(NotAPower):
        gen_grid(10, 2)


def test_grid_shuffle_keeps_points():
    a, b = gen_grid(64, 3), gen_grid(64, 3, shuffle_seed=1)
    assert sorted(map(tuple, a.X.tolist())) == sorted(map(tuple, b.X.tolist()))


def test_integer_root():
    assert integer_root(4096, 2) == 64 and integer_root(4096, 3) == 16
    with pytest.raises(NotAPower):
        integer_root(50, 2)


def test_alternating_sequence_layout():
    X = gen_alternating_lb(8, 2, gap=0.01).X[:, 0]
    assert X.tolist() == pytest.approx([0.0, 0.5, 0.49, 0.99, 0.0, 0.5, 0.49, 0.99])
    with pytest.raises(Indivisible):
        gen_alternating_lb(10, 2)


def test_alternating_sequence_cells():
    T, K = 64, 8
    X = gen_alternating_lb(T, K).X[:, 0]
    cell = np.minimum(np.floor(X * K), K - 1).astype(int)
    assert np.bincount(cell).tolist() == [T // K] * K


def test_clustered_points_stay_in_boxes():
    spec = ClusterSpec.random(5, 2, 0.8, seed=3)
    seq = gen_clustered(256, spec, seed=4)
    half = 0.5 * 256**-0.8
    d = np.abs(seq.X[:, None, :] - spec.centers[None]).max(axis=2).min(axis=1)
    assert np.all(d <= half + 1e-15)


def test_random_generators_are_seeded():
    assert gen_uniform(10, 2, seed=5) == gen_uniform(10, 2, seed=5)
    space = CovariateSpace(0, 2, ((0.0, 1.0), (0.0, 0.5, 1.0)))
    seq = gen_discrete_uniform(40, space, seed=2)
    assert set(seq.X[:, 1].tolist()) <= {0.0, 0.5, 1.0}
    assert gen_discrete_uniform(40, space, seed=2) == seq
