"""Pure-numpy fallback for the sample-rate network kernels.

Mirrors the function names and signatures of ``numba_backend`` so the
synthesis layer can call either module interchangeably. Vectorized numpy
(BLAS matmuls, array-wide exp/tanh) does not reproduce the compiled
backend's float32 accumulation order bit for bit; outputs agree to about
1e-5 relative and sampled codes can differ in rare near-tie draws. The
compiled backend is the reference for exactness tests; this one exists so
the package still runs (and can be benchmarked) without a JIT.
"""

from __future__ import annotations

import math
import weakref

import numpy as np

from ..prng import next_double as rng_next_double
from ..prng import next_u64 as rng_next_u64  # noqa: F401  (parity with numba module)

F32 = np.float32


def rng_fill_uniform(state, out, lo, hi):
    for i in range(out.size):
        out[i] = lo + (hi - lo) * rng_next_double(state)


def round_away(v):
    if v >= 0.0:
        return int(math.floor(v + 0.5))
    return int(math.ceil(v - 0.5))


def mu_encode(x, vm2, ln_vm, s1, ncodes):
    x = min(32767.0, max(-32768.0, x))
    mag = vm2 * math.log(1.0 + s1 * abs(x)) / ln_vm
    y = int(vm2) + round_away(math.copysign(mag, x))
    return min(max(y, 0), ncodes - 1)


def mu_decode(y, vm2, ln_vm, s2):
    u = float(y) - vm2
    if u == 0.0:
        return 0.0
    mag = s2 * (math.exp(ln_vm * abs(u) / vm2) - 1.0)
    x = float(round_away(math.copysign(mag, u)))
    return min(32767.0, max(-32768.0, x))


def sigmoid_f32(x):
    return F32(1.0 / (1.0 + math.exp(-float(x))))


def tanh_f32(x):
    return F32(math.tanh(float(x)))


def _sigmoid_vec(x):
    return (1.0 / (1.0 + np.exp(-x.astype(np.float64)))).astype(F32)


def _tanh_vec(x):
    return np.tanh(x.astype(np.float64)).astype(F32)


def matvec_inmajor(wt, x, out):
    out[:] = wt.T @ x


# Densified copies of block-sparse recurrent matrices. Keyed by the value
# buffer's id, with a weak reference guarding against id reuse after the
# original array is collected.
_dense_cache: dict[int, tuple] = {}


def _densified(block_row, block_col, block_vals, rows, cols):
    key = id(block_vals)
    hit = _dense_cache.get(key)
    if hit is not None:
        ref, mat = hit
        if ref() is block_vals:
            return mat
    mat = np.zeros((rows, cols), dtype=F32)
    for b in range(block_row.size):
        r0 = int(block_row[b]) * 16
        mat[r0:r0 + 16, int(block_col[b])] = block_vals[b]
    if len(_dense_cache) > 64:
        _dense_cache.clear()
    _dense_cache[key] = (weakref.ref(block_vals), mat)
    return mat


def block_sparse_matvec(block_row, block_col, block_vals, v, out):
    mat = _densified(block_row, block_col, block_vals, out.size, v.size)
    out[:] = mat @ v


def gru_gates(contrib, rec, h):
    units = h.size
    z = _sigmoid_vec(contrib[:units] + rec[:units])
    r = _sigmoid_vec(contrib[units:2 * units] + rec[units:2 * units])
    n = _tanh_vec(contrib[2 * units:] + r * rec[2 * units:])
    h[:] = z * h + (F32(1.0) - z) * n


def dual_fc(w1, w2, a1, a2, c, t1, t2, logits, k):
    t1[:k] = c @ w1
    t2[:k] = c @ w2
    logits[:k] = a1[:k] * _tanh_vec(t1[:k]) + a2[:k] * _tanh_vec(t2[:k])


def softmax_sample(logits, k, temperature, rng_state, probs):
    lg = logits[:k].astype(np.float64)
    m = lg.max()
    p = np.exp((lg - m) / temperature)
    probs[:k] = p
    u = rng_next_double(rng_state) * p.sum()
    idx = int(np.searchsorted(np.cumsum(p), u, side="right"))
    return min(idx, k - 1)


def build_input_tables(u_inmajor, emb, num_signals, embed_dim, tables):
    for k in range(num_signals):
        base = k * embed_dim
        tables[k] = emb @ u_inmajor[base:base + embed_dim]


def prepare_frame_contrib(bias, u_f_inmajor, f, out, tmp):
    tmp[:] = u_f_inmajor.T @ f
    out[:] = bias + tmp


def lpc_predict(lpc, samp_hist):
    order = lpc.size
    return F32(lpc.astype(np.float64) @ samp_hist[-order:][::-1].astype(np.float64))


def clamp16(x):
    return F32(min(32767.0, max(-32768.0, float(x))))


def srn_step(
    h_a, h_b, hist_s, hist_e, hist_p, samp_hist, rng_state,
    fca, fcb, lpc,
    tables, wa_br, wa_bc, wa_bv, ub_h, wb,
    fc_w1, fc_w2, fc_a1, fc_a2, emb_hi, emb_full,
    bunch, low_bits, k_hi, k_lo, vm2, ln_vm, s1, s2, ncodes, temperature,
    contrib_a, rec_a, tmp_b, contrib_b, rec_b, c_h, c_l, t1, t2, logits, probs,
    out_samples, out_exc, out_pred,
):
    contrib_a[:] = fca
    for k in range(bunch):
        contrib_a += tables[k, hist_s[k]]
    for k in range(bunch):
        contrib_a += tables[bunch + k, hist_e[k]]
    for k in range(bunch):
        pcode = mu_encode(float(hist_p[k]), vm2, ln_vm, s1, ncodes)
        contrib_a += tables[2 * bunch + k, pcode]

    block_sparse_matvec(wa_br, wa_bc, wa_bv, h_a, rec_a)
    gru_gates(contrib_a, rec_a, h_a)

    contrib_b[:] = fcb + ub_h.T @ h_a
    rec_b[:] = wb.T @ h_b
    gru_gates(contrib_b, rec_b, h_b)

    c_h[:] = h_b
    for i in range(bunch):
        w1 = fc_w1[i]
        w2 = fc_w2[i]
        a1 = fc_a1[i]
        a2 = fc_a2[i]
        dual_fc(w1[:, :k_hi], w2[:, :k_hi], a1, a2, c_h, t1, t2, logits, k_hi)
        hi = softmax_sample(logits, k_hi, temperature, rng_state, probs)
        if low_bits > 0:
            c_l[:] = c_h + emb_hi[hi]
            dual_fc(w1[:, k_hi:], w2[:, k_hi:], a1[k_hi:], a2[k_hi:],
                    c_l, t1, t2, logits, k_lo)
            lo = softmax_sample(logits, k_lo, temperature, rng_state, probs)
            e = (int(hi) << low_bits) + int(lo)
        else:
            e = int(hi)
        out_exc[i] = e
        c_h += emb_full[e]

    pred = hist_p[bunch - 1]
    for i in range(bunch):
        e_lin = F32(mu_decode(int(out_exc[i]), vm2, ln_vm, s2))
        s = clamp16(pred + e_lin)
        out_samples[i] = s
        out_pred[i] = pred
        samp_hist[:-1] = samp_hist[1:]
        samp_hist[-1] = s
        pred = F32(lpc @ samp_hist[::-1][:lpc.size])
        hist_p[i] = pred

    for k in range(bunch):
        hist_s[k] = mu_encode(float(out_samples[k]), vm2, ln_vm, s1, ncodes)
        hist_e[k] = out_exc[k]


def run_frame(
    h_a, h_b, hist_s, hist_e, hist_p, samp_hist, rng_state,
    bias_a, ua_f, bias_b, ub_f, f, lpc,
    tables, wa_br, wa_bc, wa_bv, ub_h, wb,
    fc_w1, fc_w2, fc_a1, fc_a2, emb_hi, emb_full,
    bunch, low_bits, k_hi, k_lo, vm2, ln_vm, s1, s2, ncodes, temperature,
    fca, fcb, contrib_a, rec_a, tmp_a, tmp_b, contrib_b, rec_b,
    c_h, c_l, t1, t2, logits, probs,
    out_samples, out_exc, out_pred,
):
    prepare_frame_contrib(bias_a, ua_f, f, fca, tmp_a)
    prepare_frame_contrib(bias_b, ub_f, f, fcb, tmp_b)
    n_steps = out_samples.size // bunch
    for step in range(n_steps):
        lo = step * bunch
        hi = lo + bunch
        srn_step(
            h_a, h_b, hist_s, hist_e, hist_p, samp_hist, rng_state,
            fca, fcb, lpc,
            tables, wa_br, wa_bc, wa_bv, ub_h, wb,
            fc_w1, fc_w2, fc_a1, fc_a2, emb_hi, emb_full,
            bunch, low_bits, k_hi, k_lo, vm2, ln_vm, s1, s2, ncodes,
            temperature,
            contrib_a, rec_a, tmp_b, contrib_b, rec_b, c_h, c_l,
            t1, t2, logits, probs,
            out_samples[lo:hi], out_exc[lo:hi], out_pred[lo:hi],
        )
