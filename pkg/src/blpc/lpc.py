"""Per-frame linear prediction from band-cepstral features.

The conditioning features carry 20 Bark-spaced cepstral coefficients per
frame; the synthesizer turns them back into 16 LPC coefficients once per
frame and holds them constant for the frame's 240 samples:

    cepstrum --inverse DCT--> band log energies --exp--> band powers
    --piecewise-linear interpolation--> 257-bin power spectrum
    --inverse FFT--> autocorrelation --lag window + noise floor-->
    Levinson-Durbin --> 16 coefficients

Band layout (24 kHz, 512-point FFT, 257 bins): 21 edges on a Bark-like
warp of 0..12 kHz, pinned below. Band value b lives at node BAND_EDGES[b]
(b = 0..19); the spectrum is interpolated linearly between nodes and held
flat above the last node. The matching forward extractor (test and demo
use only) averages bins with the adjoint triangular weights, so forward
then inverse approximately round-trips smooth spectra.

The lag window is the binomial (second-order) approximation of a Gaussian:
w_k = 1 - (LAG_WINDOW_COEF * k)^2, plus a relative noise floor on r[0].
Both taper high-lag correlation estimates so Levinson-Durbin stays well
conditioned on near-singular inputs.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

NUM_BANDS = 20
NFFT = 512
NUM_BINS = NFFT // 2 + 1
LPC_ORDER = 16
FRAME_SIZE = 240
WINDOW_SIZE = 480
LAG_WINDOW_COEF = 0.008
NOISE_FLOOR = 1e-5
_LOG_FLOOR = 1e-10

# Bark-like band edges as bin indices (24 kHz / 512-point FFT, 46.875 Hz
# per bin). Equal steps on the warp 13*atan(0.00076 f) + 3.5*atan((f/7500)^2)
# from 0 to 12 kHz, snapped to distinct integer bins.
BAND_EDGES = np.array(
    [0, 3, 5, 8, 10, 13, 17, 20, 24, 29, 34, 40, 48, 59, 71, 87, 107,
     130, 159, 197, 256], dtype=np.int64)

assert BAND_EDGES.size == NUM_BANDS + 1


def _dct_matrix(n: int) -> np.ndarray:
    # orthonormal DCT-II: rows are analysis vectors, inverse is .T
    k = np.arange(n)[:, None]
    m = np.arange(n)[None, :]
    d = np.cos(np.pi * (2 * m + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    d[0] /= np.sqrt(2.0)
    return d


_DCT = _dct_matrix(NUM_BANDS)


def _band_average_matrix() -> np.ndarray:
    # adjoint of the interpolation: triangles between adjacent nodes,
    # tail bins fold into the last band, rows normalized to an average
    w = np.zeros((NUM_BANDS, NUM_BINS))
    for b in range(NUM_BANDS):
        lo, hi = BAND_EDGES[b], BAND_EDGES[b + 1]
        for j in range(lo, hi):
            frac = (j - lo) / (hi - lo)
            w[b, j] += 1.0 - frac
            if b + 1 < NUM_BANDS:
                w[b + 1, j] += frac
            else:
                w[b, j] += frac
    w[NUM_BANDS - 1, NUM_BINS - 1] = 1.0
    return w / w.sum(axis=1, keepdims=True)


_BAND_AVG = _band_average_matrix()


class LevinsonResult(NamedTuple):
    a: np.ndarray            # (order,) prediction coefficients
    error: float             # final prediction error power
    reflections: np.ndarray  # (order,) reflection coefficients
    errors: np.ndarray       # (order+1,) error power per model order


def levinson_durbin(r: np.ndarray, order: int = LPC_ORDER) -> LevinsonResult:
    """Solve the Toeplitz normal equations r[k] = sum_i a_i r[k-i].

    Convention: predictor p_t = sum_{i=1..M} a_i s_{t-i}, so an AR(1)
    process with pole 0.5 yields a = [0.5, 0, ...].
    """
    r = np.asarray(r, dtype=np.float64)
    if r.size < order + 1:
        raise ValueError(f"need {order + 1} autocorrelation lags, got {r.size}")
    if not np.all(np.isfinite(r)):
        raise ValueError("non-finite autocorrelation")
    if r[0] <= 0.0:
        raise ValueError("autocorrelation r[0] must be positive")

    a = np.zeros(order)
    refl = np.zeros(order)
    errors = np.zeros(order + 1)
    err = r[0]
    errors[0] = err
    for i in range(order):
        acc = r[i + 1]
        for j in range(i):
            acc -= a[j] * r[i - j]
        k = acc / err
        refl[i] = k
        new_a = a.copy()
        for j in range(i):
            new_a[j] = a[j] - k * a[i - 1 - j]
        new_a[i] = k
        a = new_a
        err *= 1.0 - k * k
        errors[i + 1] = err
    return LevinsonResult(a=a, error=float(err), reflections=refl,
                          errors=errors)


def band_energies_to_spectrum(energies: np.ndarray) -> np.ndarray:
    """Interpolate 20 band powers onto the 257-bin power spectrum."""
    nodes = BAND_EDGES[:NUM_BANDS].astype(np.float64)
    return np.interp(np.arange(NUM_BINS, dtype=np.float64), nodes,
                     np.asarray(energies, dtype=np.float64))


def feature_autocorrelation(features: np.ndarray,
                            order: int = LPC_ORDER) -> np.ndarray:
    """Windowed autocorrelation lags 0..order implied by one feature row."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 1 or features.size < NUM_BANDS:
        raise ValueError(f"expected a feature row with at least {NUM_BANDS} "
                         f"values, got shape {features.shape}")
    cep = features[:NUM_BANDS]
    if not np.all(np.isfinite(cep)):
        raise ValueError("non-finite feature values")

    log_e = _DCT.T @ cep
    band_power = np.exp(log_e)
    spectrum = band_energies_to_spectrum(band_power)
    # irfft of a real nonnegative spectrum: the autocorrelation sequence
    r = np.fft.irfft(spectrum, n=NFFT)[:order + 1]
    lags = np.arange(order + 1, dtype=np.float64)
    r *= 1.0 - (LAG_WINDOW_COEF * lags) ** 2
    r[0] *= 1.0 + NOISE_FLOOR
    return r


def cepstrum_to_lpc(features: np.ndarray, order: int = LPC_ORDER) -> np.ndarray:
    """16 LPC coefficients from one feature row (first 20 values used)."""
    return levinson_durbin(feature_autocorrelation(features, order), order).a


def average_features(features: np.ndarray) -> np.ndarray:
    """Pool feature rows (n, 22) into one representative row.

    Cepstra are averaged in the band-power domain (exp of the inverse DCT),
    which is the unbiased way to pool spectral estimates; pitch columns
    average arithmetically.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2 or feats.shape[1] < NUM_BANDS:
        raise ValueError("expected (n_frames, >=20) feature rows")
    band_pow = np.exp(feats[:, :NUM_BANDS] @ _DCT)
    out = np.empty(feats.shape[1])
    out[:NUM_BANDS] = _DCT @ np.log(np.maximum(band_pow.mean(axis=0),
                                               _LOG_FLOOR))
    out[NUM_BANDS:] = feats[:, NUM_BANDS:].mean(axis=0)
    return out


def predict(history: np.ndarray, coeffs: np.ndarray) -> float:
    """p_t = sum_i a_i * s_{t-i}; history holds the last M samples, newest last."""
    history = np.asarray(history, dtype=np.float64)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if history.size != coeffs.size:
        raise ValueError("history length must match coefficient count")
    acc = 0.0
    for i in range(coeffs.size):
        acc += coeffs[i] * history[history.size - 1 - i]
    return acc


# ---------------------------------------------------------------------------
# Forward feature extraction. Test and demo plumbing: it builds the
# round-trip examples for cepstrum_to_lpc and feeds the command-line
# feature generator; nothing in the synthesis path depends on it.
# ---------------------------------------------------------------------------


def spectrum_to_band_energies(power: np.ndarray) -> np.ndarray:
    return _BAND_AVG @ np.asarray(power, dtype=np.float64)


def features_from_audio(x: np.ndarray, pitch_min: int = 32,
                        pitch_max: int = 400) -> np.ndarray:
    """Per-frame feature rows (n_frames, 22) from mono PCM.

    Frames advance by 240 samples with a 480-sample vonHann analysis
    window (zero-padded at the tail). Pitch is a plain autocorrelation
    peak, good enough for synthetic test signals.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected mono audio")
    n_frames = x.size // FRAME_SIZE
    if n_frames == 0:
        raise ValueError("audio shorter than one frame")
    window = np.hanning(WINDOW_SIZE)
    feats = np.zeros((n_frames, NUM_BANDS + 2))
    for i in range(n_frames):
        seg = x[i * FRAME_SIZE:i * FRAME_SIZE + WINDOW_SIZE]
        if seg.size < WINDOW_SIZE:
            seg = np.pad(seg, (0, WINDOW_SIZE - seg.size))
        wx = seg * window
        power = np.abs(np.fft.rfft(wx, n=NFFT)) ** 2 / NFFT
        bands = np.maximum(spectrum_to_band_energies(power), _LOG_FLOOR)
        feats[i, :NUM_BANDS] = _DCT @ np.log(bands)

        # crude pitch: normalized autocorrelation peak over the lag range
        ac0 = float(wx @ wx)
        best_lag, best_corr = pitch_min, 0.0
        if ac0 > 0.0:
            for lag in range(pitch_min, min(pitch_max, WINDOW_SIZE - 1)):
                c = float(wx[lag:] @ wx[:-lag]) / ac0
                if c > best_corr:
                    best_corr, best_lag = c, lag
        feats[i, NUM_BANDS] = float(best_lag)
        feats[i, NUM_BANDS + 1] = float(min(max(best_corr, 0.0), 1.0))
    return feats
