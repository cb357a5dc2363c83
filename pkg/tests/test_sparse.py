import numpy as np
import pytest

from blpc.prng import Rng
from blpc.sparse import (BlockSparseMatrix, random_block_sparse,
                         target_block_counts)


def test_target_counts_for_standard_recurrent():
    # 1152x384 with 16x1 blocks: 27648 slots, 9216 per gate
    counts = target_block_counts(1152, 384, (0.01, 0.01, 0.1))
    assert counts == [92, 92, 922]


def test_random_matrix_hits_exact_counts():
    m = random_block_sparse(Rng(3), 1152, 384, (0.01, 0.01, 0.1))
    assert m.nblocks == 92 + 92 + 922
    assert m.nnz == 16 * m.nblocks
    dense = m.densify()
    assert np.count_nonzero(dense) == m.nnz
    # per-gate occupancy: rows [0,384) update, [384,768) reset, rest candidate
    gate_rows = [np.count_nonzero(dense[g * 384:(g + 1) * 384]) // 16
                 for g in range(3)]
    assert gate_rows == [92, 92, 922]


def test_no_duplicate_blocks():
    m = random_block_sparse(Rng(8), 384, 384, (0.2, 0.2, 0.2))
    coords = set(zip(m.block_row.tolist(), m.block_col.tolist()))
    assert len(coords) == m.nblocks


def test_duplicate_coordinates_rejected():
    vals = np.ones((2, 16), np.float32)
    with pytest.raises(ValueError):
        BlockSparseMatrix(rows=32, cols=4,
                          block_row=np.array([0, 0], np.int32),
                          block_col=np.array([1, 1], np.int32),
                          block_vals=vals)


def test_from_dense_roundtrip():
    rng = np.random.default_rng(0)
    dense = np.zeros((48, 8), np.float32)
    dense[0:16, 3] = rng.standard_normal(16)
    dense[32:48, 0] = rng.standard_normal(16)
    m = BlockSparseMatrix.from_dense(dense)
    assert m.nblocks == 2
    assert np.array_equal(m.densify(), dense)


def test_matvec_zero_matrix():
    from blpc.kernels import sparse_matvec

    m = BlockSparseMatrix.from_dense(np.zeros((48, 16), np.float32))
    v = np.ones(16, np.float32)
    assert np.array_equal(sparse_matvec(m, v), np.zeros(48, np.float32))


def test_matvec_identity_pattern_blocks():
    from blpc.kernels import sparse_matvec

    # a single block whose 16 values copy v[col] scaled by 1..16
    vals = np.arange(1, 17, dtype=np.float32).reshape(1, 16)
    m = BlockSparseMatrix(rows=32, cols=4,
                          block_row=np.array([1], np.int32),
                          block_col=np.array([2], np.int32),
                          block_vals=vals)
    v = np.array([0, 0, 3.0, 0], np.float32)
    out = sparse_matvec(m, v)
    assert np.array_equal(out[16:32], 3.0 * np.arange(1, 17,
                                                      dtype=np.float32))
    assert not out[:16].any()


def test_matvec_matches_dense_500_trials():
    from blpc.kernels import sparse_matvec

    rng = np.random.default_rng(11)
    worst = 0.0
    for trial in range(500):
        m = random_block_sparse(Rng(trial), 384, 384, (0.01, 0.01, 0.1))
        v = rng.standard_normal(384).astype(np.float32)
        got = sparse_matvec(m, v)
        want = m.densify().astype(np.float64) @ v.astype(np.float64)
        denom = max(1e-9, float(np.abs(want).max()))
        worst = max(worst, float(np.abs(got - want).max()) / denom)
    assert worst < 1e-6


def test_matvec_dimension_mismatch():
    from blpc.kernels import sparse_matvec

    m = random_block_sparse(Rng(1), 48, 16, (0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        sparse_matvec(m, np.ones(17, np.float32))


def test_backends_agree_exactly():
    from blpc.kernels import HAVE_NUMBA, sparse_matvec

    if not HAVE_NUMBA:
        pytest.skip("no jit backend in this environment")
    rng = np.random.default_rng(5)
    m = random_block_sparse(Rng(123), 1152, 384, (0.01, 0.01, 0.1))
    v = rng.standard_normal(384).astype(np.float32)
    a = sparse_matvec(m, v, backend="numba")
    b = sparse_matvec(m, v, backend="numpy")
    # the fallback accumulates through BLAS on the densified matrix, so
    # rounding can differ in the last bits; contract is 1e-6 relative
    denom = max(1e-9, float(np.abs(a).max()))
    assert float(np.abs(a - b).max()) / denom < 1e-6
