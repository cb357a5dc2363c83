"""Block-sparse matrix storage for the bunch GRU's recurrent weights.

Blocks are 16 rows by 1 column: each stored block is one column slice of
16 consecutive output rows. That shape keeps the nonzero values for one
input activation contiguous, so the matvec kernel is a short strided saxpy
per block. The matrix rows are organized as three stacked gate sections
(update, reset, candidate), each with its own density.

Blocks are kept sorted by (row_block, col). The matvec accumulates each
output element's contributions in ascending column order, which makes the
sparse product bit-identical to a naive dense dot over the densified
matrix in float32 (skipped zeros do not change IEEE addition results).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .prng import Rng

BLOCK_ROWS = 16


@dataclass
class BlockSparseMatrix:
    """Nonzero 16x1 blocks of a rows x cols matrix.

    block_row[i] is the row-block index (rows block_row[i]*16 ..+16),
    block_col[i] the column, block_vals[i] the 16 values. Sorted by
    (block_row, block_col); no duplicate coordinates.
    """

    rows: int
    cols: int
    block_row: np.ndarray  # int32 (nblocks,)
    block_col: np.ndarray  # int32 (nblocks,)
    block_vals: np.ndarray  # float32 (nblocks, 16)
    densities: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.rows % BLOCK_ROWS != 0:
            raise ValueError(f"rows must be a multiple of {BLOCK_ROWS}")
        self.block_row = np.asarray(self.block_row, dtype=np.int32)
        self.block_col = np.asarray(self.block_col, dtype=np.int32)
        self.block_vals = np.ascontiguousarray(self.block_vals, dtype=np.float32)
        if self.block_vals.shape != (self.block_row.size, BLOCK_ROWS):
            raise ValueError("block_vals must have shape (nblocks, 16)")
        coords = set(zip(self.block_row.tolist(), self.block_col.tolist()))
        if len(coords) != self.block_row.size:
            raise ValueError("duplicate block coordinates")
        order = np.lexsort((self.block_col, self.block_row))
        self.block_row = np.ascontiguousarray(self.block_row[order])
        self.block_col = np.ascontiguousarray(self.block_col[order])
        self.block_vals = np.ascontiguousarray(self.block_vals[order])

    @property
    def nblocks(self) -> int:
        return int(self.block_row.size)

    @property
    def nnz(self) -> int:
        return self.nblocks * BLOCK_ROWS

    def densify(self) -> np.ndarray:
        """Expand to a dense float32 matrix with zeros elsewhere."""
        dense = np.zeros((self.rows, self.cols), dtype=np.float32)
        for rb, c, vals in zip(self.block_row, self.block_col, self.block_vals):
            r0 = int(rb) * BLOCK_ROWS
            dense[r0 : r0 + BLOCK_ROWS, int(c)] = vals
        return dense

    @classmethod
    def from_dense(
        cls, dense: np.ndarray, densities: tuple[float, float, float] = (1.0, 1.0, 1.0)
    ) -> "BlockSparseMatrix":
        """Collect all 16x1 blocks that contain any nonzero."""
        dense = np.asarray(dense, dtype=np.float32)
        rows, cols = dense.shape
        brs, bcs, vals = [], [], []
        for rb in range(rows // BLOCK_ROWS):
            sl = dense[rb * BLOCK_ROWS : (rb + 1) * BLOCK_ROWS]
            for c in np.nonzero(np.any(sl != 0.0, axis=0))[0]:
                brs.append(rb)
                bcs.append(int(c))
                vals.append(sl[:, c])
        return cls(
            rows=rows,
            cols=cols,
            block_row=np.array(brs, dtype=np.int32),
            block_col=np.array(bcs, dtype=np.int32),
            block_vals=np.array(vals, dtype=np.float32).reshape(-1, BLOCK_ROWS),
            densities=densities,
        )


def target_block_counts(
    rows: int, cols: int, densities: tuple[float, float, float]
) -> list[int]:
    """Exact per-gate block counts for the given densities.

    The three gates split the rows evenly; each gate has
    (gate_rows/16)*cols block slots.
    """
    gate_rows = rows // 3
    slots = (gate_rows // BLOCK_ROWS) * cols
    return [round(slots * d) for d in densities]


def random_block_sparse(
    rng: Rng,
    rows: int,
    cols: int,
    densities: tuple[float, float, float],
    scale: float = 0.1,
) -> BlockSparseMatrix:
    """Deterministically place and fill blocks to hit the target densities.

    Placement uses a partial Fisher-Yates shuffle over the slot indices of
    each gate, so the block count matches target_block_counts exactly.
    """
    gate_rows = rows // 3
    blocks_per_col_gate = gate_rows // BLOCK_ROWS
    counts = target_block_counts(rows, cols, densities)
    brs, bcs = [], []
    for g, count in enumerate(counts):
        nslots = blocks_per_col_gate * cols
        slots = list(range(nslots))
        for i in range(count):
            j = i + rng.below(nslots - i)
            slots[i], slots[j] = slots[j], slots[i]
            slot = slots[i]
            brs.append(g * blocks_per_col_gate + slot // cols)
            bcs.append(slot % cols)
    nblocks = len(brs)
    vals = rng.fill_uniform((nblocks, BLOCK_ROWS), -scale, scale).astype(np.float32)
    return BlockSparseMatrix(
        rows=rows,
        cols=cols,
        block_row=np.array(brs, dtype=np.int32),
        block_col=np.array(bcs, dtype=np.int32),
        block_vals=vals,
        densities=tuple(densities),
    )
