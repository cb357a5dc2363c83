"""Bunched sample-rate network: state handling and synthesis loop.

One network step emits a bunch of S samples. Per step:

1. The bunch GRU (384 units, block-sparse recurrent) consumes the frame
   conditioning plus one lookup-table row for each of the 3*S signal
   codes (previous S samples, S excitations, S predictions); the context
   GRU (16 units) then advances on [conditioning | bunch state].
2. Excitation loop: for each bunch position, sample a code from the
   per-position dual FC stack; with a bit split the high code is sampled
   first, a 16-wide embedding of it shifts the conditioning vector, the
   low code is sampled, and the full code recombines as
   (high << low_bits) | low. The full-code embedding is added to the
   conditioning vector after every position.
3. Reconstruction loop: sample = clamp16(prediction + decoded
   excitation) in the linear domain, then the next linear prediction is
   computed from the updated sample history.

State lives in plain preallocated arrays so the compiled kernel mutates
it in place; the functional `srn_step` wrapper copies state in and out
for callers that want value semantics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .config import ModelConfig
from .frn import FrnWeights, frn_forward
from .lpc import cepstrum_to_lpc
from .modelio import WeightStore, pcm_to_int16
from .prng import seed_state


@dataclass
class SrnState:
    """Carried between bunched steps; arrays are mutated in place."""

    gru_a_state: np.ndarray       # float32 (384,)
    gru_b_state: np.ndarray       # float32 (16,)
    last_samples: np.ndarray      # int64 (S,) codes, oldest first
    last_excitations: np.ndarray  # int64 (S,) codes
    last_predictions: np.ndarray  # float32 (S,) linear, oldest first
    sample_history: np.ndarray    # float32 (M+S,) linear, newest last
    rng_state: np.ndarray         # uint64 (4,)

    def copy(self) -> "SrnState":
        return SrnState(*(np.array(getattr(self, f), copy=True)
                          for f in ("gru_a_state", "gru_b_state",
                                    "last_samples", "last_excitations",
                                    "last_predictions", "sample_history",
                                    "rng_state")))


@dataclass(frozen=True)
class BunchOutput:
    samples: np.ndarray           # float32 (S,) linear PCM
    excitation_codes: np.ndarray  # int64 (S,)
    predictions: np.ndarray       # float32 (S,)


def init_state(config: ModelConfig, seed: int | None = None) -> SrnState:
    """Zero GRU states, zero-code histories, RNG seeded from the config."""
    s = config.bunch_size
    zero_code = config.mu_spec.zero_code
    return SrnState(
        gru_a_state=np.zeros(config.gru_a_units, dtype=np.float32),
        gru_b_state=np.zeros(config.gru_b_units, dtype=np.float32),
        last_samples=np.full(s, zero_code, dtype=np.int64),
        last_excitations=np.full(s, zero_code, dtype=np.int64),
        last_predictions=np.zeros(s, dtype=np.float32),
        sample_history=np.zeros(config.lpc_order + s, dtype=np.float32),
        rng_state=seed_state(config.seed if seed is None else seed),
    )


@dataclass(frozen=True)
class PreparedModel:
    """Weight tensors repacked for the step kernel.

    Input-major layouts and precomputed per-code contribution tables;
    immutable and shareable across synthesis streams.
    """

    config: ModelConfig
    backend: str
    frn_weights: FrnWeights
    bias_a: np.ndarray     # (3*ga,)
    ua_f: np.ndarray       # (frn_dim, 3*ga) conditioning block, input-major
    tables: np.ndarray     # (3*S, ncodes, 3*ga)
    wa_br: np.ndarray      # sparse recurrent block rows
    wa_bc: np.ndarray
    wa_bv: np.ndarray
    bias_b: np.ndarray     # (3*gb,)
    ub_f: np.ndarray       # (frn_dim, 3*gb)
    ub_h: np.ndarray       # (ga, 3*gb)
    wb: np.ndarray         # (gb, 3*gb)
    fc_w1: np.ndarray      # (S, gb, k_hi + k_lo)
    fc_w2: np.ndarray
    fc_a1: np.ndarray      # (S, k_hi + k_lo)
    fc_a2: np.ndarray
    emb_hi: np.ndarray     # (2^Bh, gb), dummy (1, gb) without a split
    emb_full: np.ndarray   # (ncodes, gb)
    k_hi: int
    k_lo: int

    @property
    def codec_scalars(self) -> tuple:
        spec = self.config.mu_spec
        return (float(spec.v_m2), math.log(spec.v_m), float(spec.s1),
                float(spec.s2), spec.num_codes)


def _inmajor(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(a, dtype=np.float32).T)


def prepare_model(store: WeightStore,
                  backend: str | None = None) -> PreparedModel:
    c = store.config
    be_name = backend if backend is not None else kernels.active_backend()
    kernels.resolve_backend(be_name)  # fail fast on bad names
    s, (bh, bl) = c.bunch_size, c.split
    emb_dim, d = c.embed_dim, c.frn_dim

    frn_w = FrnWeights(*(store.get(f"frn.{n}") for n in
                         ("conv1_w", "conv1_b", "conv2_w", "conv2_b",
                          "dense1_w", "dense1_b", "dense2_w", "dense2_b")))
    frn_w.validate(c)

    ua = store.get("gru_a.input_w")
    tables = kernels.precompute_input_tables(
        ua, store.get("emb.signal"), 3 * s, emb_dim, backend=be_name)
    ua_f = _inmajor(ua[:, 3 * s * emb_dim:])
    rec_a = store.get("gru_a.recurrent")

    ub = store.get("gru_b.input_w")
    ub_f = _inmajor(ub[:, :d])
    ub_h = _inmajor(ub[:, d:])
    wb = _inmajor(store.get("gru_b.recurrent"))

    k_hi, k_lo = 2 ** bh, (2 ** bl if bl > 0 else 0)

    fc_w1 = np.stack([_inmajor(store.get("fc.high_w1")[i]) for i in range(s)])
    fc_w2 = np.stack([_inmajor(store.get("fc.high_w2")[i]) for i in range(s)])
    fc_a1 = np.ascontiguousarray(store.get("fc.high_a1"), dtype=np.float32)
    fc_a2 = np.ascontiguousarray(store.get("fc.high_a2"), dtype=np.float32)
    if bl > 0:
        lo_w1 = np.stack([_inmajor(store.get("fc.low_w1")[i])
                          for i in range(s)])
        lo_w2 = np.stack([_inmajor(store.get("fc.low_w2")[i])
                          for i in range(s)])
        fc_w1 = np.ascontiguousarray(np.concatenate([fc_w1, lo_w1], axis=2))
        fc_w2 = np.ascontiguousarray(np.concatenate([fc_w2, lo_w2], axis=2))
        fc_a1 = np.ascontiguousarray(
            np.concatenate([fc_a1, store.get("fc.low_a1")], axis=1),
            dtype=np.float32)
        fc_a2 = np.ascontiguousarray(
            np.concatenate([fc_a2, store.get("fc.low_a2")], axis=1),
            dtype=np.float32)
        emb_hi = np.ascontiguousarray(store.get("emb.high"),
                                      dtype=np.float32)
    else:
        emb_hi = np.zeros((1, c.gru_b_units), dtype=np.float32)

    return PreparedModel(
        config=c, backend=be_name, frn_weights=frn_w,
        bias_a=np.ascontiguousarray(store.get("gru_a.bias"),
                                    dtype=np.float32),
        ua_f=ua_f, tables=tables,
        wa_br=rec_a.block_row, wa_bc=rec_a.block_col, wa_bv=rec_a.block_vals,
        bias_b=np.ascontiguousarray(store.get("gru_b.bias"),
                                    dtype=np.float32),
        ub_f=ub_f, ub_h=ub_h, wb=wb,
        fc_w1=fc_w1, fc_w2=fc_w2, fc_a1=fc_a1, fc_a2=fc_a2,
        emb_hi=emb_hi,
        emb_full=np.ascontiguousarray(store.get("emb.full"),
                                      dtype=np.float32),
        k_hi=k_hi, k_lo=k_lo,
    )


class _Scratch:
    """Preallocated work buffers for one synthesis stream."""

    def __init__(self, config: ModelConfig, k_hi: int):
        ga3 = 3 * config.gru_a_units
        gb3 = 3 * config.gru_b_units
        gb = config.gru_b_units
        f32 = np.float32
        self.fca = np.empty(ga3, f32)
        self.fcb = np.empty(gb3, f32)
        self.contrib_a = np.empty(ga3, f32)
        self.rec_a = np.empty(ga3, f32)
        self.tmp_a = np.empty(ga3, f32)
        self.tmp_b = np.empty(gb3, f32)
        self.contrib_b = np.empty(gb3, f32)
        self.rec_b = np.empty(gb3, f32)
        self.c_h = np.empty(gb, f32)
        self.c_l = np.empty(gb, f32)
        self.t1 = np.empty(k_hi, f32)
        self.t2 = np.empty(k_hi, f32)
        self.logits = np.empty(k_hi, f32)
        self.probs = np.empty(k_hi, np.float64)
        n = config.frame_size
        self.frame_pcm = np.empty(n, f32)
        self.frame_exc = np.empty(n, np.int64)
        self.frame_pred = np.empty(n, f32)


def _step_args(model: PreparedModel, state: SrnState, scratch: _Scratch,
               fca, fcb, lpc_f32, temperature: float, out_samples, out_exc,
               out_pred) -> tuple:
    c = model.config
    vm2, ln_vm, s1, s2, ncodes = model.codec_scalars
    return (
        state.gru_a_state, state.gru_b_state, state.last_samples,
        state.last_excitations, state.last_predictions,
        state.sample_history, state.rng_state,
        fca, fcb, lpc_f32,
        model.tables, model.wa_br, model.wa_bc, model.wa_bv,
        model.ub_h, model.wb,
        model.fc_w1, model.fc_w2, model.fc_a1, model.fc_a2,
        model.emb_hi, model.emb_full,
        c.bunch_size, c.low_bits, model.k_hi, model.k_lo,
        vm2, ln_vm, s1, s2, ncodes, float(temperature),
        scratch.contrib_a, scratch.rec_a, scratch.tmp_b, scratch.contrib_b,
        scratch.rec_b, scratch.c_h, scratch.c_l, scratch.t1, scratch.t2,
        scratch.logits, scratch.probs,
        out_samples, out_exc, out_pred,
    )


def srn_step(state: SrnState, f: np.ndarray, lpc: np.ndarray,
             model: PreparedModel, temperature: float = 1.0
             ) -> tuple[BunchOutput, SrnState]:
    """One bunched step with value semantics: returns (output, new state)."""
    c = model.config
    if state.last_samples.size != c.bunch_size:
        raise ValueError(
            f"state carries bunch size {state.last_samples.size}, model "
            f"expects {c.bunch_size}")
    be = kernels.resolve_backend(model.backend)
    new = state.copy()
    scratch = _Scratch(c, model.k_hi)
    s = c.bunch_size
    out_samples = np.empty(s, np.float32)
    out_exc = np.empty(s, np.int64)
    out_pred = np.empty(s, np.float32)
    fca = scratch.fca
    fcb = scratch.fcb
    be.prepare_frame_contrib(model.bias_a, model.ua_f,
                             np.ascontiguousarray(f, dtype=np.float32),
                             fca, scratch.tmp_a)
    be.prepare_frame_contrib(model.bias_b, model.ub_f,
                             np.ascontiguousarray(f, dtype=np.float32),
                             fcb, scratch.tmp_b)
    lpc_f32 = np.ascontiguousarray(lpc, dtype=np.float32)
    be.srn_step(*_step_args(model, new, scratch, fca, fcb, lpc_f32,
                            temperature, out_samples, out_exc, out_pred))
    return BunchOutput(samples=out_samples, excitation_codes=out_exc,
                       predictions=out_pred), new


class Synthesizer:
    """One synthesis stream: a prepared model plus owned state and scratch.

    Reusable across calls; all per-step buffers are allocated once here,
    so the frame loop itself allocates nothing. Not safe for concurrent
    use by multiple threads; run one Synthesizer per stream instead
    (they may share the PreparedModel).
    """

    def __init__(self, model: PreparedModel, seed: int | None = None,
                 temperature: float = 1.0):
        self.model = model
        self.temperature = float(temperature)
        self._backend = kernels.resolve_backend(model.backend)
        self._scratch = _Scratch(model.config, model.k_hi)
        self._seed = seed
        self.state = init_state(model.config, seed)

    def reset(self, seed: int | None = None) -> None:
        if seed is not None:
            self._seed = seed
        self.state = init_state(self.model.config, self._seed)

    def synthesize(self, features: np.ndarray,
                   collect_codes: bool = False):
        """PCM for a window of feature rows; (n_frames * 240,) int16.

        With collect_codes=True returns (pcm, excitation_codes,
        predictions) for diagnostics.
        """
        c = self.model.config
        features = np.asarray(features)
        if features.ndim != 2 or features.shape[1] != c.num_features:
            raise ValueError(
                f"expected (n_frames, {c.num_features}) features, got "
                f"shape {features.shape}")
        if features.size and not np.all(np.isfinite(features)):
            raise ValueError("non-finite feature values")
        n_frames = features.shape[0]
        n = c.frame_size
        pcm = np.empty(n_frames * n, dtype=np.float32)
        exc = np.empty(n_frames * n, dtype=np.int64) if collect_codes else None
        preds = np.empty(n_frames * n, dtype=np.float32) if collect_codes \
            else None
        if n_frames == 0:
            out = pcm_to_int16(pcm)
            return (out, exc, preds) if collect_codes else out

        f_all = frn_forward(features, self.model.frn_weights, c)
        sc = self._scratch
        vm2, ln_vm, s1, s2, ncodes = self.model.codec_scalars
        st = self.state
        m = self.model
        for i in range(n_frames):
            lpc_f32 = np.ascontiguousarray(
                cepstrum_to_lpc(features[i].astype(np.float64),
                                c.lpc_order), dtype=np.float32)
            self._backend.run_frame(
                st.gru_a_state, st.gru_b_state, st.last_samples,
                st.last_excitations, st.last_predictions,
                st.sample_history, st.rng_state,
                m.bias_a, m.ua_f, m.bias_b, m.ub_f, f_all[i], lpc_f32,
                m.tables, m.wa_br, m.wa_bc, m.wa_bv, m.ub_h, m.wb,
                m.fc_w1, m.fc_w2, m.fc_a1, m.fc_a2, m.emb_hi, m.emb_full,
                c.bunch_size, c.low_bits, m.k_hi, m.k_lo,
                vm2, ln_vm, s1, s2, ncodes, self.temperature,
                sc.fca, sc.fcb, sc.contrib_a, sc.rec_a, sc.tmp_a, sc.tmp_b,
                sc.contrib_b, sc.rec_b, sc.c_h, sc.c_l, sc.t1, sc.t2,
                sc.logits, sc.probs,
                sc.frame_pcm, sc.frame_exc, sc.frame_pred,
            )
            pcm[i * n:(i + 1) * n] = sc.frame_pcm
            if collect_codes:
                exc[i * n:(i + 1) * n] = sc.frame_exc
                preds[i * n:(i + 1) * n] = sc.frame_pred
        out = pcm_to_int16(pcm)
        return (out, exc, preds) if collect_codes else out


def synthesize(features: np.ndarray, store: WeightStore,
               seed: int | None = None, temperature: float = 1.0,
               backend: str | None = None) -> np.ndarray:
    """Convenience one-shot synthesis from a weight store."""
    model = prepare_model(store, backend=backend)
    return Synthesizer(model, seed=seed,
                       temperature=temperature).synthesize(features)
