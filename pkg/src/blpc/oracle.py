"""Naive reference implementation of the bunched sample-rate step.

Ground truth for the equivalence tests: explicit dense matrix-vector
products in straight-line loops, densified recurrent matrices, embedding
rows multiplied out on every step - no lookup tables, no sparsity
skipping, no fused frame loop. The PRNG and codec scalar functions are
shared with the main path on purpose: any divergence must come from the
kernel optimizations, which are the thing under test.

Float32 accumulation in ascending input order matches the optimized
kernels' pinned order, so on the compiled backend the two paths produce
bit-identical states and sampled codes. The loops are JIT-compiled too
(plain Python would be unusably slow as an oracle); without numba they
run interpreted and the semantics are unchanged.

A separate hand-written unbunched step (one sample per network pass, no
bunch loops, single 256-way softmax) backs the degeneracy check that
bunching with S=1 changes nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .frn import frn_forward
from .lpc import cepstrum_to_lpc
from .modelio import WeightStore, pcm_to_int16

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def deco(fn):
            return fn

        return deco


if HAVE_NUMBA:
    from .kernels.numba_backend import (mu_decode, mu_encode,
                                        rng_next_double)
else:
    from .kernels.numpy_backend import (mu_decode, mu_encode,
                                        rng_next_double)

F32 = np.float32


@njit(cache=True)
def _sigmoid(x):
    return F32(1.0 / (1.0 + math.exp(-float(x))))


@njit(cache=True)
def _tanh(x):
    return F32(math.tanh(float(x)))


@njit(cache=True)
def _sample(logits, k, temperature, rng_state):
    m = float(logits[0])
    for i in range(1, k):
        v = float(logits[i])
        if v > m:
            m = v
    probs = np.empty(k, np.float64)
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
def _gru(contrib, rec, h):
    units = h.size
    for i in range(units):
        z = _sigmoid(contrib[i] + rec[i])
        r = _sigmoid(contrib[units + i] + rec[units + i])
        n = _tanh(contrib[2 * units + i] + r * rec[2 * units + i])
        h[i] = z * h[i] + (F32(1.0) - z) * n


@njit(cache=True)
def _dense_matvec(w, v, out):
    # out[i] = sum_j w[i, j] * v[j], ascending j, float32
    for i in range(w.shape[0]):
        acc = F32(0.0)
        for j in range(w.shape[1]):
            acc += w[i, j] * v[j]
        out[i] = acc


@njit(cache=True)
def _dual_fc_naive(w1, w2, a1, a2, c, logits, k):
    # w1, w2 are (K, 16) as stored
    for q in range(k):
        acc1 = F32(0.0)
        acc2 = F32(0.0)
        for j in range(c.size):
            acc1 += w1[q, j] * c[j]
            acc2 += w2[q, j] * c[j]
        logits[q] = a1[q] * _tanh(acc1) + a2[q] * _tanh(acc2)


@njit(cache=True)
def _oracle_step(
    h_a, h_b, hist_s, hist_e, hist_p, samp_hist, rng_state,
    f, lpc,
    emb_sig, ua, bias_a, wa_dense,
    ub, bias_b, wb_dense,
    hi_w1, hi_w2, hi_a1, hi_a2,
    lo_w1, lo_w2, lo_a1, lo_a2,
    emb_hi, emb_full,
    bunch, low_bits, k_hi, k_lo,
    vm2, ln_vm, s1, s2, ncodes, temperature,
    out_samples, out_exc, out_pred, trace_c,
):
    na3 = 3 * h_a.size
    nb = h_b.size
    nb3 = 3 * nb
    emb_dim = emb_sig.shape[1]
    f_dim = f.size
    f_base = 3 * bunch * emb_dim

    # bunch GRU input: bias + conditioning dot, then one explicit
    # embedding-times-weight-block dot per signal, in signal order
    contrib_a = np.empty(na3, F32)
    for i in range(na3):
        acc = F32(0.0)
        for j in range(f_dim):
            acc += ua[i, f_base + j] * f[j]
        contrib_a[i] = bias_a[i] + acc
    for k in range(3 * bunch):
        if k < bunch:
            code = hist_s[k]
        elif k < 2 * bunch:
            code = hist_e[k - bunch]
        else:
            code = mu_encode(float(hist_p[k - 2 * bunch]), vm2, ln_vm, s1,
                             ncodes)
        base = k * emb_dim
        for i in range(na3):
            acc = F32(0.0)
            for j in range(emb_dim):
                acc += ua[i, base + j] * emb_sig[code, j]
            contrib_a[i] += acc

    rec_a = np.empty(na3, F32)
    _dense_matvec(wa_dense, h_a, rec_a)
    _gru(contrib_a, rec_a, h_a)

    contrib_b = np.empty(nb3, F32)
    for i in range(nb3):
        accf = F32(0.0)
        for j in range(f_dim):
            accf += ub[i, j] * f[j]
        acch = F32(0.0)
        for j in range(h_a.size):
            acch += ub[i, f_dim + j] * h_a[j]
        contrib_b[i] = (bias_b[i] + accf) + acch
    rec_b = np.empty(nb3, F32)
    _dense_matvec(wb_dense, h_b, rec_b)
    _gru(contrib_b, rec_b, h_b)

    # excitation loop, recording the conditioning vector for the
    # additivity instrumentation check
    c_h = np.empty(nb, F32)
    c_l = np.empty(nb, F32)
    logits = np.empty(k_hi, F32)
    for j in range(nb):
        c_h[j] = h_b[j]
        trace_c[0, j] = c_h[j]
    for i in range(bunch):
        _dual_fc_naive(hi_w1[i], hi_w2[i], hi_a1[i], hi_a2[i], c_h,
                       logits, k_hi)
        hi = _sample(logits, k_hi, temperature, rng_state)
        if low_bits > 0:
            for j in range(nb):
                c_l[j] = c_h[j] + emb_hi[hi, j]
            _dual_fc_naive(lo_w1[i], lo_w2[i], lo_a1[i], lo_a2[i], c_l,
                           logits, k_lo)
            lo = _sample(logits, k_lo, temperature, rng_state)
            e = (hi << low_bits) + lo
        else:
            e = hi
        out_exc[i] = e
        for j in range(nb):
            c_h[j] = c_h[j] + emb_full[e, j]
            trace_c[i + 1, j] = c_h[j]

    # reconstruction loop
    nh = samp_hist.size
    order = lpc.size
    pred = hist_p[bunch - 1]
    for i in range(bunch):
        e_lin = F32(mu_decode(out_exc[i], vm2, ln_vm, s2))
        s = pred + e_lin
        if s > F32(32767.0):
            s = F32(32767.0)
        elif s < F32(-32768.0):
            s = F32(-32768.0)
        out_samples[i] = s
        out_pred[i] = pred
        for j in range(nh - 1):
            samp_hist[j] = samp_hist[j + 1]
        samp_hist[nh - 1] = s
        acc = F32(0.0)
        for j in range(order):
            acc += lpc[j] * samp_hist[nh - 1 - j]
        pred = acc
        hist_p[i] = pred

    for k in range(bunch):
        hist_s[k] = mu_encode(float(out_samples[k]), vm2, ln_vm, s1, ncodes)
        hist_e[k] = out_exc[k]


@njit(cache=True)
def _baseline_step(
    h_a, h_b, hist_s, hist_e, hist_p, samp_hist, rng_state,
    f, lpc,
    emb_sig, ua, bias_a, wa_dense,
    ub, bias_b, wb_dense,
    w1, w2, a1, a2,
    vm2, ln_vm, s1, s2, ncodes, temperature,
    out_samples, out_exc, out_pred,
):
    """Plain unbunched step: one sample, one 2^B-way softmax, no loops over
    bunch positions. Written separately from the bunched code on purpose."""
    na3 = 3 * h_a.size
    nb = h_b.size
    nb3 = 3 * nb
    emb_dim = emb_sig.shape[1]
    f_dim = f.size
    k_full = emb_sig.shape[0]

    contrib_a = np.empty(na3, F32)
    for i in range(na3):
        acc = F32(0.0)
        for j in range(f_dim):
            acc += ua[i, 3 * emb_dim + j] * f[j]
        contrib_a[i] = bias_a[i] + acc
    codes3 = np.empty(3, np.int64)
    codes3[0] = hist_s[0]
    codes3[1] = hist_e[0]
    codes3[2] = mu_encode(float(hist_p[0]), vm2, ln_vm, s1, ncodes)
    for k in range(3):
        code = codes3[k]
        base = k * emb_dim
        for i in range(na3):
            acc = F32(0.0)
            for j in range(emb_dim):
                acc += ua[i, base + j] * emb_sig[code, j]
            contrib_a[i] += acc

    rec_a = np.empty(na3, F32)
    _dense_matvec(wa_dense, h_a, rec_a)
    _gru(contrib_a, rec_a, h_a)

    contrib_b = np.empty(nb3, F32)
    for i in range(nb3):
        accf = F32(0.0)
        for j in range(f_dim):
            accf += ub[i, j] * f[j]
        acch = F32(0.0)
        for j in range(h_a.size):
            acch += ub[i, f_dim + j] * h_a[j]
        contrib_b[i] = (bias_b[i] + accf) + acch
    rec_b = np.empty(nb3, F32)
    _dense_matvec(wb_dense, h_b, rec_b)
    _gru(contrib_b, rec_b, h_b)

    logits = np.empty(k_full, F32)
    _dual_fc_naive(w1, w2, a1, a2, h_b, logits, k_full)
    e = _sample(logits, k_full, temperature, rng_state)
    out_exc[0] = e

    nh = samp_hist.size
    pred = hist_p[0]
    e_lin = F32(mu_decode(e, vm2, ln_vm, s2))
    s = pred + e_lin
    if s > F32(32767.0):
        s = F32(32767.0)
    elif s < F32(-32768.0):
        s = F32(-32768.0)
    out_samples[0] = s
    out_pred[0] = pred
    for j in range(nh - 1):
        samp_hist[j] = samp_hist[j + 1]
    samp_hist[nh - 1] = s
    acc = F32(0.0)
    for j in range(lpc.size):
        acc += lpc[j] * samp_hist[nh - 1 - j]
    hist_p[0] = acc
    hist_s[0] = mu_encode(float(s), vm2, ln_vm, s1, ncodes)
    hist_e[0] = e


# ---------------------------------------------------------------------------
# Python-side wrappers.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleModel:
    """Raw tensors arranged for the naive step (densified, untransposed)."""

    config: ModelConfig
    frn_weights: object
    emb_sig: np.ndarray
    ua: np.ndarray
    bias_a: np.ndarray
    wa_dense: np.ndarray
    ub: np.ndarray
    bias_b: np.ndarray
    wb_dense: np.ndarray
    hi_w1: np.ndarray
    hi_w2: np.ndarray
    hi_a1: np.ndarray
    hi_a2: np.ndarray
    lo_w1: np.ndarray
    lo_w2: np.ndarray
    lo_a1: np.ndarray
    lo_a2: np.ndarray
    emb_hi: np.ndarray
    emb_full: np.ndarray
    k_hi: int
    k_lo: int

    @property
    def codec_scalars(self):
        spec = self.config.mu_spec
        return (float(spec.v_m2), math.log(spec.v_m), float(spec.s1),
                float(spec.s2), spec.num_codes)


def build_oracle_model(store: WeightStore) -> OracleModel:
    from .frn import FrnWeights

    c = store.config
    s, (bh, bl) = c.bunch_size, c.split
    gb = c.gru_b_units
    k_hi, k_lo = 2 ** bh, (2 ** bl if bl > 0 else 0)
    f32 = np.float32

    def arr(name):
        return np.ascontiguousarray(store.get(name), dtype=f32)

    if bl > 0:
        lo_w1, lo_w2 = arr("fc.low_w1"), arr("fc.low_w2")
        lo_a1, lo_a2 = arr("fc.low_a1"), arr("fc.low_a2")
        emb_hi = arr("emb.high")
    else:
        lo_w1 = np.zeros((s, 1, gb), f32)
        lo_w2 = np.zeros((s, 1, gb), f32)
        lo_a1 = np.zeros((s, 1), f32)
        lo_a2 = np.zeros((s, 1), f32)
        emb_hi = np.zeros((1, gb), f32)

    frn_w = FrnWeights(*(store.get(f"frn.{n}") for n in
                         ("conv1_w", "conv1_b", "conv2_w", "conv2_b",
                          "dense1_w", "dense1_b", "dense2_w", "dense2_b")))
    return OracleModel(
        config=c, frn_weights=frn_w,
        emb_sig=arr("emb.signal"), ua=arr("gru_a.input_w"),
        bias_a=arr("gru_a.bias"),
        wa_dense=np.ascontiguousarray(store.get("gru_a.recurrent").densify()),
        ub=arr("gru_b.input_w"), bias_b=arr("gru_b.bias"),
        wb_dense=arr("gru_b.recurrent"),
        hi_w1=arr("fc.high_w1"), hi_w2=arr("fc.high_w2"),
        hi_a1=arr("fc.high_a1"), hi_a2=arr("fc.high_a2"),
        lo_w1=lo_w1, lo_w2=lo_w2, lo_a1=lo_a1, lo_a2=lo_a2,
        emb_hi=emb_hi, emb_full=arr("emb.full"),
        k_hi=k_hi, k_lo=k_lo,
    )


def oracle_srn_step(state, f, lpc, model: OracleModel,
                    temperature: float = 1.0, trace: np.ndarray | None = None):
    """Value-semantics naive step; same contract as the optimized srn_step.

    `trace`, if given, must be (S+1, 16) float32 and receives the
    conditioning vector before the excitation loop and after each
    position's full-code embedding add.
    """
    from .srn import BunchOutput

    c = model.config
    if state.last_samples.size != c.bunch_size:
        raise ValueError(
            f"state carries bunch size {state.last_samples.size}, model "
            f"expects {c.bunch_size}")
    new = state.copy()
    s = c.bunch_size
    out_samples = np.empty(s, np.float32)
    out_exc = np.empty(s, np.int64)
    out_pred = np.empty(s, np.float32)
    if trace is None:
        trace = np.empty((s + 1, c.gru_b_units), np.float32)
    vm2, ln_vm, s1, s2, ncodes = model.codec_scalars
    _oracle_step(
        new.gru_a_state, new.gru_b_state, new.last_samples,
        new.last_excitations, new.last_predictions, new.sample_history,
        new.rng_state,
        np.ascontiguousarray(f, dtype=np.float32),
        np.ascontiguousarray(lpc, dtype=np.float32),
        model.emb_sig, model.ua, model.bias_a, model.wa_dense,
        model.ub, model.bias_b, model.wb_dense,
        model.hi_w1, model.hi_w2, model.hi_a1, model.hi_a2,
        model.lo_w1, model.lo_w2, model.lo_a1, model.lo_a2,
        model.emb_hi, model.emb_full,
        s, c.low_bits, model.k_hi, model.k_lo,
        vm2, ln_vm, s1, s2, ncodes, float(temperature),
        out_samples, out_exc, out_pred, trace,
    )
    return BunchOutput(samples=out_samples, excitation_codes=out_exc,
                       predictions=out_pred), new


def oracle_synthesize(features: np.ndarray, store: WeightStore,
                      seed: int | None = None,
                      temperature: float = 1.0) -> np.ndarray:
    """Frame loop over oracle steps; mirrors Synthesizer.synthesize."""
    from .srn import init_state

    model = build_oracle_model(store)
    c = store.config
    features = np.asarray(features)
    n_frames = features.shape[0]
    n = c.frame_size
    state = init_state(c, seed)
    pcm = np.empty(n_frames * n, dtype=np.float32)
    if n_frames == 0:
        return pcm_to_int16(pcm)
    f_all = frn_forward(features, model.frn_weights, c)
    steps = c.steps_per_frame
    s = c.bunch_size
    for i in range(n_frames):
        lpc_f32 = np.ascontiguousarray(
            cepstrum_to_lpc(features[i].astype(np.float64), c.lpc_order),
            dtype=np.float32)
        for t in range(steps):
            out, state = oracle_srn_step(state, f_all[i], lpc_f32, model,
                                         temperature)
            lo = i * n + t * s
            pcm[lo:lo + s] = out.samples
    return pcm_to_int16(pcm)


def baseline_synthesize(features: np.ndarray, store: WeightStore,
                        seed: int | None = None,
                        temperature: float = 1.0,
                        return_state: bool = False):
    """Unbunched synthesis (S=1, no-split configs only).

    With return_state=True also returns the final SrnState, so callers
    can compare RNG positions (draw counts) against the bunched path.
    """
    from .srn import init_state

    c = store.config
    if c.bunch_size != 1 or c.low_bits != 0:
        raise ValueError("baseline requires bunch size 1 and no bit split")
    model = build_oracle_model(store)
    features = np.asarray(features)
    n_frames = features.shape[0]
    n = c.frame_size
    state = init_state(c, seed)
    pcm = np.empty(n_frames * n, dtype=np.float32)
    if n_frames == 0:
        out = pcm_to_int16(pcm)
        return (out, state) if return_state else out
    f_all = frn_forward(features, model.frn_weights, c)
    vm2, ln_vm, s1, s2, ncodes = model.codec_scalars
    out_samples = np.empty(1, np.float32)
    out_exc = np.empty(1, np.int64)
    out_pred = np.empty(1, np.float32)
    for i in range(n_frames):
        lpc_f32 = np.ascontiguousarray(
            cepstrum_to_lpc(features[i].astype(np.float64), c.lpc_order),
            dtype=np.float32)
        f_row = f_all[i]
        for t in range(n):
            _baseline_step(
                state.gru_a_state, state.gru_b_state, state.last_samples,
                state.last_excitations, state.last_predictions,
                state.sample_history, state.rng_state,
                f_row, lpc_f32,
                model.emb_sig, model.ua, model.bias_a, model.wa_dense,
                model.ub, model.bias_b, model.wb_dense,
                model.hi_w1[0], model.hi_w2[0], model.hi_a1[0],
                model.hi_a2[0],
                vm2, ln_vm, s1, s2, ncodes, float(temperature),
                out_samples, out_exc, out_pred,
            )
            pcm[i * n + t] = out_samples[0]
    out = pcm_to_int16(pcm)
    return (out, state) if return_state else out
