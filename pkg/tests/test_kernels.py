import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from seqbalance import kernels

backends = kernels.available_backends()
needs_both = pytest.mark.skipif("compiled" not in backends, reason="compiled extension not built")


def test_backend_selected():
    assert kernels.BACKEND in backends


@needs_both
@given(st.integers(1, 40), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_pigeonhole_backends_agree(half, n_cells, seed):
    rng = np.random.default_rng(seed)
    T = 2 * half
    cells = rng.integers(0, n_cells, size=T).astype(np.int64)
    coins = rng.integers(0, 2, size=T, dtype=np.uint8)
    comp = kernels.load_backend("compiled").pigeonhole_run(cells, coins, n_cells)
    py = kernels.load_backend("python").pigeonhole_run(cells, coins, n_cells)
    assert np.array_equal(comp[0], py[0]) and comp[1] == py[1]


@needs_both
@given(st.integers(1, 25), st.integers(0, 2**32 - 1), st.booleans())
def test_assignment_backends_agree_bitwise(n, seed, integral):
    rng = np.random.default_rng(seed)
    C = rng.random((n, n))
    if integral:
        C = np.floor(C * 5)
    a = kernels.load_backend("compiled").assignment(C)
    b = kernels.load_backend("python").assignment(C)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


@pytest.mark.parametrize("backend", backends)
def test_assignment_duals_certify(backend, rng):
    impl = kernels.load_backend(backend)
    C = rng.random((30, 30))
    cols, u, v = impl.assignment(C)
    assert sorted(cols.tolist()) == list(range(30))
    assert np.all(C - u[:, None] - v[None, :] >= -1e-12)
    assert np.allclose(C[np.arange(30), cols], u + v[cols])


@pytest.mark.parametrize("backend", backends)
def test_pigeonhole_forced_phase(backend):
    impl = kernels.load_backend(backend)
    cells = np.zeros(6, dtype=np.int64)
    w, tau = impl.pigeonhole_run(cells, np.ones(6, dtype=np.uint8), 1)
    assert w.tolist() == [1, 0, 1, 0, 1, 0]
    assert tau == 5


def test_empty_assignment():
    cols, u, v = kernels.assignment(np.zeros((0, 0)))
    assert cols.size == 0
