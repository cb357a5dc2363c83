"""Backend dispatch for the hot kernels.

Two interchangeable implementations live here:

* ``numba_backend``: JIT-compiled loops with a pinned float32 accumulation
  order; bit-identical to the naive reference path and the default
  whenever numba imports.
* ``numpy_backend``: vectorized fallback, same signatures, tolerance-level
  agreement (about 1e-5; sampled codes can differ on rare near-ties).

Selection: the ``BLPC_BACKEND`` environment variable (``auto``, ``numba``
or ``numpy``, default ``auto``) fixes the process-wide default at import
time; individual calls and the synthesis API accept an explicit backend
name to override it, which is how the comparison benchmarks run both in
one process.
"""

from __future__ import annotations

import os

import numpy as np

from ..sparse import BlockSparseMatrix

from . import numpy_backend

try:
    from . import numba_backend

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via BLPC_BACKEND=numpy
    numba_backend = None
    HAVE_NUMBA = False

_VALID = ("auto", "numba", "numpy")


def _resolve_default() -> str:
    req = os.environ.get("BLPC_BACKEND", "auto").strip().lower()
    if req not in _VALID:
        raise ValueError(
            f"BLPC_BACKEND must be one of {_VALID}, got {req!r}")
    if req == "numba" and not HAVE_NUMBA:
        raise ImportError(
            "BLPC_BACKEND=numba but numba is not importable")
    if req == "auto":
        return "numba" if HAVE_NUMBA else "numpy"
    return req


_DEFAULT = _resolve_default()


def active_backend() -> str:
    """Name of the process-wide default backend."""
    return _DEFAULT


def resolve_backend(name: str | None = None):
    """Return the backend module for `name` (default: the active one)."""
    if name is None:
        name = _DEFAULT
    name = name.lower()
    if name == "auto":
        name = "numba" if HAVE_NUMBA else "numpy"
    if name == "numba":
        if not HAVE_NUMBA:
            raise ImportError("numba backend requested but numba is not importable")
        return numba_backend
    if name == "numpy":
        return numpy_backend
    raise ValueError(f"unknown backend {name!r}")


# ---------------------------------------------------------------------------
# Thin public wrappers over the backend primitives. These allocate their
# outputs and accept friendly types; the synthesis hot path bypasses them
# and calls the fused frame kernel directly on preallocated buffers.
# ---------------------------------------------------------------------------


def sparse_matvec(matrix: BlockSparseMatrix, v: np.ndarray,
                  backend: str | None = None) -> np.ndarray:
    be = resolve_backend(backend)
    v = np.ascontiguousarray(v, dtype=np.float32)
    if v.ndim != 1 or v.size != matrix.cols:
        raise ValueError(
            f"vector has shape {v.shape}, matrix expects ({matrix.cols},)")
    out = np.empty(matrix.rows, dtype=np.float32)
    be.block_sparse_matvec(matrix.block_row, matrix.block_col,
                           matrix.block_vals, v, out)
    return out


def gru_step(state: np.ndarray, recurrent, input_contrib: np.ndarray,
             backend: str | None = None) -> np.ndarray:
    """One GRU update; `recurrent` is a dense (3u, u) matrix or block-sparse."""
    be = resolve_backend(backend)
    h = np.array(state, dtype=np.float32, copy=True)
    contrib = np.ascontiguousarray(input_contrib, dtype=np.float32)
    if contrib.size != 3 * h.size:
        raise ValueError(
            f"input contribution has {contrib.size} values, expected "
            f"{3 * h.size}")
    rec_cols = (recurrent.cols if isinstance(recurrent, BlockSparseMatrix)
                else np.asarray(recurrent).shape[1])
    if rec_cols != h.size:
        raise ValueError(
            f"recurrent matrix has {rec_cols} columns, state has {h.size}")
    rec = np.empty(3 * h.size, dtype=np.float32)
    if isinstance(recurrent, BlockSparseMatrix):
        be.block_sparse_matvec(recurrent.block_row, recurrent.block_col,
                               recurrent.block_vals, h, rec)
    else:
        wt = np.ascontiguousarray(
            np.asarray(recurrent, dtype=np.float32).T)
        be.matvec_inmajor(wt, h, rec)
    be.gru_gates(contrib, rec, h)
    return h


def dual_fc_logits(c: np.ndarray, w1: np.ndarray, w2: np.ndarray,
                   a1: np.ndarray, a2: np.ndarray,
                   backend: str | None = None) -> np.ndarray:
    """a1*tanh(w1.T@c) + a2*tanh(w2.T@c) for input-major (n_in, K) weights."""
    be = resolve_backend(backend)
    if w1.shape != w2.shape or w1.shape[0] != np.asarray(c).size:
        raise ValueError(
            f"weight shapes {w1.shape}/{w2.shape} do not match input "
            f"dim {np.asarray(c).size}")
    k = w1.shape[1]
    if np.asarray(a1).size != k or np.asarray(a2).size != k:
        raise ValueError("scale vectors must have one entry per logit")
    t1 = np.empty(k, dtype=np.float32)
    t2 = np.empty(k, dtype=np.float32)
    logits = np.empty(k, dtype=np.float32)
    be.dual_fc(np.ascontiguousarray(w1, dtype=np.float32),
               np.ascontiguousarray(w2, dtype=np.float32),
               np.ascontiguousarray(a1, dtype=np.float32),
               np.ascontiguousarray(a2, dtype=np.float32),
               np.ascontiguousarray(c, dtype=np.float32),
               t1, t2, logits, k)
    return logits


def sample_softmax(logits: np.ndarray, rng_state: np.ndarray,
                   temperature: float = 1.0,
                   backend: str | None = None) -> int:
    """Draw one code; consumes exactly one uniform from `rng_state`."""
    be = resolve_backend(backend)
    lg = np.ascontiguousarray(logits, dtype=np.float32)
    if not np.isfinite(lg).all():
        raise ValueError("logits must be finite")
    probs = np.empty(lg.size, dtype=np.float64)
    return int(be.softmax_sample(lg, lg.size, float(temperature),
                                 rng_state, probs))


def precompute_input_tables(u: np.ndarray, emb: np.ndarray, num_signals: int,
                            embed_dim: int,
                            backend: str | None = None) -> np.ndarray:
    """Per-signal code-to-contribution tables from the (n_out, n_in) input matrix.

    tables[k, code, :] equals emb[code] pushed through signal block k of
    `u`, so the step kernel replaces three embedding matmuls per signal
    with one row lookup each.
    """
    be = resolve_backend(backend)
    u = np.asarray(u)
    if u.shape[1] < num_signals * embed_dim:
        raise ValueError(
            f"input matrix has {u.shape[1]} columns, needs at least "
            f"{num_signals * embed_dim} for {num_signals} signals")
    if np.asarray(emb).shape[1] != embed_dim:
        raise ValueError("embedding width does not match embed_dim")
    u_inmajor = np.ascontiguousarray(np.asarray(u, dtype=np.float32).T)
    emb = np.ascontiguousarray(emb, dtype=np.float32)
    n_out = u.shape[0]
    tables = np.empty((num_signals, emb.shape[0], n_out), dtype=np.float32)
    be.build_input_tables(u_inmajor, emb, num_signals, embed_dim, tables)
    return tables


__all__ = [
    "HAVE_NUMBA",
    "active_backend",
    "resolve_backend",
    "sparse_matvec",
    "gru_step",
    "dual_fc_logits",
    "sample_softmax",
    "precompute_input_tables",
]
