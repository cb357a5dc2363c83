"""JIT-compiled hot kernels for the sample-rate network.

Everything here is `numba.njit` with `cache=True`; the heavy step/frame
kernels also release the GIL so independent synthesis streams can run
concurrently on shared immutable weights.

Numeric contract (kept in lockstep with the naive reference in
``blpc.oracle`` and exercised by the equivalence tests):

* network arithmetic is float32; each dot product accumulates its terms
  in ascending input-index order, one product at a time;
* a signal's contribution to a GRU input is computed as a full dot first
  and then added to the accumulator as one float32 add per element (this
  is what makes a precomputed lookup-table row bit-identical to an
  explicit matrix-vector product with the embedding);
* transcendentals go through libm in float64 and are rounded back to
  float32, so compiled and interpreted code produce the same bits;
* sampling consumes xoshiro256** draws; probabilities are float64.

Weight matrices used by saxpy-style loops are stored input-major
(shape (n_in, n_out)): iterating inputs in the outer loop turns each
column into a vectorizable multiply-add while preserving the ascending
input-index accumulation order per output element.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

U64 = np.uint64
F32 = np.float32

# ---------------------------------------------------------------------------
# PRNG: xoshiro256** on a uint64[4] state array (see blpc.prng for the
# reference implementation; the two are bit-identical).
# ---------------------------------------------------------------------------


@njit(cache=True)
def _rotl(x, k):
    return (x << k) | (x >> (U64(64) - k))


@njit(cache=True)
def rng_next_u64(state):
    result = _rotl(state[1] * U64(5), U64(7)) * U64(9)
    t = state[1] << U64(17)
    state[2] ^= state[0]
    state[3] ^= state[1]
    state[1] ^= state[2]
    state[0] ^= state[3]
    state[2] ^= t
    state[3] = _rotl(state[3], U64(45))
    return result


@njit(cache=True)
def rng_next_double(state):
    return float(rng_next_u64(state) >> U64(11)) * 1.1102230246251565e-16  # 2**-53


@njit(cache=True)
def rng_fill_uniform(state, out, lo, hi):
    # flat float64 fill; callers cast as needed
    for i in range(out.size):
        out[i] = lo + (hi - lo) * rng_next_double(state)


# ---------------------------------------------------------------------------
# Scalar codec and activations (float64 through libm, rounded to float32).
# ---------------------------------------------------------------------------


@njit(cache=True)
def round_away(v):
    if v >= 0.0:
        return np.int64(math.floor(v + 0.5))
    return np.int64(math.ceil(v - 0.5))


@njit(cache=True)
def mu_encode(x, vm2, ln_vm, s1, ncodes):
    if x > 32767.0:
        x = 32767.0
    elif x < -32768.0:
        x = -32768.0
    mag = vm2 * math.log(1.0 + s1 * abs(x)) / ln_vm
    y = np.int64(vm2) + round_away(math.copysign(mag, x))
    if y < 0:
        return np.int64(0)
    if y >= ncodes:
        return ncodes - np.int64(1)
    return y


@njit(cache=True)
def mu_decode(y, vm2, ln_vm, s2):
    u = float(y) - vm2
    if u == 0.0:
        return 0.0
    mag = s2 * (math.exp(ln_vm * abs(u) / vm2) - 1.0)
    x = float(round_away(math.copysign(mag, u)))
    if x < -32768.0:
        return -32768.0
    if x > 32767.0:
        return 32767.0
    return x


@njit(cache=True)
def sigmoid_f32(x):
    return F32(1.0 / (1.0 + math.exp(-float(x))))


@njit(cache=True)
def tanh_f32(x):
    return F32(math.tanh(float(x)))


# ---------------------------------------------------------------------------
# Matvec primitives.
# ---------------------------------------------------------------------------


@njit(cache=True)
def matvec_inmajor(wt, x, out):
    """out = wt.T @ x for input-major wt (n_in, n_out); out zeroed here.

    Accumulates per output element in ascending input order: bit-identical
    to a naive row-major dot, but the inner loop is a vector multiply-add.
    """
    n_in, n_out = wt.shape
    for i in range(n_out):
        out[i] = F32(0.0)
    for j in range(n_in):
        xj = x[j]
        row = wt[j]
        for i in range(n_out):
            out[i] += row[i] * xj


@njit(cache=True)
def block_sparse_matvec(block_row, block_col, block_vals, v, out):
    """out = W @ v for 16x1-block sparse W; out zeroed here.

    Blocks are sorted by (row_block, col), so each output element receives
    its products in ascending column order - the same order (and therefore
    the same float32 bits) as a dense dot over the densified matrix.
    """
    for i in range(out.size):
        out[i] = F32(0.0)
    nb = block_row.size
    for b in range(nb):
        r0 = block_row[b] * 16
        xv = v[block_col[b]]
        vals = block_vals[b]
        for k in range(16):
            out[r0 + k] += vals[k] * xv


@njit(cache=True)
def gru_gates(contrib, rec, h):
    """Standard GRU gate update, in place on h.

    contrib and rec hold the three stacked gate pre-activations
    (update, reset, candidate); the update gate keeps the old state:
    h' = z*h + (1-z)*n with n = tanh(cn + r*rn).
    """
    units = h.size
    for i in range(units):
        z = sigmoid_f32(contrib[i] + rec[i])
        r = sigmoid_f32(contrib[units + i] + rec[units + i])
        n = tanh_f32(contrib[2 * units + i] + r * rec[2 * units + i])
        h[i] = z * h[i] + (F32(1.0) - z) * n


@njit(cache=True)
def dual_fc(w1, w2, a1, a2, c, t1, t2, logits, k):
    """logits[:k] = a1*tanh(w1.T@c) + a2*tanh(w2.T@c).

    w1, w2 are input-major (16, K) slices; t1, t2 are scratch.
    """
    n_in = w1.shape[0]
    for i in range(k):
        t1[i] = F32(0.0)
        t2[i] = F32(0.0)
    for j in range(n_in):
        cj = c[j]
        r1 = w1[j]
        r2 = w2[j]
        for i in range(k):
            t1[i] += r1[i] * cj
            t2[i] += r2[i] * cj
    for i in range(k):
        logits[i] = a1[i] * tanh_f32(t1[i]) + a2[i] * tanh_f32(t2[i])


@njit(cache=True)
def softmax_sample(logits, k, temperature, rng_state, probs):
    """Draw one categorical sample from softmax(logits[:k]/temperature).

    Probabilities are accumulated in float64 in ascending index order and
    one uniform double decides the code, so the draw is reproducible
    across platforms given the logits bits and the RNG state.
    """
    m = float(logits[0])
    for i in range(1, k):
        v = float(logits[i])
        if v > m:
            m = v
    total = 0.0
    for i in range(k):
        p = math.exp((float(logits[i]) - m) / temperature)
        probs[i] = p
        total += p
    u = rng_next_double(rng_state) * total
    acc = 0.0
    for i in range(k):
        acc += probs[i]
        if u < acc:
            return np.int64(i)
    return np.int64(k - 1)


@njit(cache=True)
def build_input_tables(u_inmajor, emb, num_signals, embed_dim, tables):
    """tables[k, code, :] = emb[code, :] @ U_k for every signal block k.

    u_inmajor is the full input weight matrix, input-major
    (3*S*embed_dim + frn_dim, 3*units); signal block k occupies input rows
    [k*embed_dim, (k+1)*embed_dim). Row contents are bit-identical to an
    explicit ascending-order dot with the embedding.
    """
    ncodes = emb.shape[0]
    n_out = u_inmajor.shape[1]
    for k in range(num_signals):
        base = k * embed_dim
        for code in range(ncodes):
            row = tables[k, code]
            for i in range(n_out):
                row[i] = F32(0.0)
            for d in range(embed_dim):
                ev = emb[code, d]
                urow = u_inmajor[base + d]
                for i in range(n_out):
                    row[i] += urow[i] * ev


@njit(cache=True)
def prepare_frame_contrib(bias, u_f_inmajor, f, out, tmp):
    """out = bias + U_f @ f (blockwise: full dot first, then one add)."""
    matvec_inmajor(u_f_inmajor, f, tmp)
    for i in range(out.size):
        out[i] = bias[i] + tmp[i]


@njit(cache=True)
def lpc_predict(lpc, samp_hist):
    """p = sum_j lpc[j] * hist[-1-j]: linear prediction from newest samples."""
    order = lpc.size
    n = samp_hist.size
    acc = F32(0.0)
    for j in range(order):
        acc += lpc[j] * samp_hist[n - 1 - j]
    return acc


@njit(cache=True)
def clamp16(x):
    if x > F32(32767.0):
        return F32(32767.0)
    if x < F32(-32768.0):
        return F32(-32768.0)
    return x


# ---------------------------------------------------------------------------
# Fused sample-rate network step and frame loop.
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def srn_step(
    # state (mutated in place)
    h_a, h_b, hist_s, hist_e, hist_p, samp_hist, rng_state,
    # per-frame context
    fca, fcb, lpc,
    # weights
    tables, wa_br, wa_bc, wa_bv, ub_h, wb,
    fc_w1, fc_w2, fc_a1, fc_a2, emb_hi, emb_full,
    # mode / codec scalars
    bunch, low_bits, k_hi, k_lo, vm2, ln_vm, s1, s2, ncodes, temperature,
    # scratch
    contrib_a, rec_a, tmp_b, contrib_b, rec_b, c_h, c_l, t1, t2, logits, probs,
    # outputs (length bunch slices)
    out_samples, out_exc, out_pred,
):
    na = h_a.size
    nb_units = h_b.size

    # ---- bunch GRU input: frame contribution, then one table row per signal
    for i in range(3 * na):
        contrib_a[i] = fca[i]
    for k in range(bunch):  # previous samples (codes)
        row = tables[k, hist_s[k]]
        for i in range(3 * na):
            contrib_a[i] += row[i]
    for k in range(bunch):  # previous excitations (codes)
        row = tables[bunch + k, hist_e[k]]
        for i in range(3 * na):
            contrib_a[i] += row[i]
    for k in range(bunch):  # previous predictions (linear, encoded here)
        pcode = mu_encode(float(hist_p[k]), vm2, ln_vm, s1, ncodes)
        row = tables[2 * bunch + k, pcode]
        for i in range(3 * na):
            contrib_a[i] += row[i]

    # ---- bunch GRU advance
    block_sparse_matvec(wa_br, wa_bc, wa_bv, h_a, rec_a)
    gru_gates(contrib_a, rec_a, h_a)

    # ---- context GRU advance (input = frame contribution + bunch GRU state)
    matvec_inmajor(ub_h, h_a, tmp_b)
    for i in range(3 * nb_units):
        contrib_b[i] = fcb[i] + tmp_b[i]
    matvec_inmajor(wb, h_b, rec_b)
    gru_gates(contrib_b, rec_b, h_b)

    # ---- excitation loop: sample codes, conditioning accumulates embeddings
    for i in range(nb_units):
        c_h[i] = h_b[i]
    for i in range(bunch):
        w1 = fc_w1[i]
        w2 = fc_w2[i]
        a1 = fc_a1[i]
        a2 = fc_a2[i]
        dual_fc(w1[:, :k_hi], w2[:, :k_hi], a1[:k_hi], a2[:k_hi],
                c_h, t1, t2, logits, k_hi)
        hi = softmax_sample(logits, k_hi, temperature, rng_state, probs)
        if low_bits > 0:
            for j in range(nb_units):
                c_l[j] = c_h[j] + emb_hi[hi, j]
            dual_fc(w1[:, k_hi:], w2[:, k_hi:], a1[k_hi:], a2[k_hi:],
                    c_l, t1, t2, logits, k_lo)
            lo = softmax_sample(logits, k_lo, temperature, rng_state, probs)
            e = (hi << low_bits) + lo
        else:
            e = hi
        out_exc[i] = e
        for j in range(nb_units):
            c_h[j] = c_h[j] + emb_full[e, j]

    # ---- reconstruction loop: sample = prediction + decoded excitation
    nh = samp_hist.size
    pred = hist_p[bunch - 1]
    for i in range(bunch):
        e_lin = F32(mu_decode(out_exc[i], vm2, ln_vm, s2))
        s = clamp16(pred + e_lin)
        out_samples[i] = s
        out_pred[i] = pred
        for j in range(nh - 1):
            samp_hist[j] = samp_hist[j + 1]
        samp_hist[nh - 1] = s
        pred = lpc_predict(lpc, samp_hist)
        hist_p[i] = pred  # hist_p becomes the S new predictions

    # ---- history update for the next step
    for k in range(bunch):
        hist_s[k] = mu_encode(float(out_samples[k]), vm2, ln_vm, s1, ncodes)
        hist_e[k] = out_exc[k]


@njit(cache=True, nogil=True)
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
    """All bunched steps of one frame: conditioning prep plus N/S steps."""
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
