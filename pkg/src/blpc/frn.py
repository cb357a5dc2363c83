"""Frame-rate conditioning network.

Runs once per feature frame, far off the hot path (about 0.1 MFLOP per
10 ms frame versus tens of MFLOPs in the sample loop), so it stays plain
numpy in float64 and only the final conditioning vector is cast to
float32 for the sample-rate network.

Shape conventions: conv weights are (out_channels, in_channels, 3) with
zero padding of one frame on each side per layer, dense weights are
(out, in). The two tanh convolutions are bridged by a residual add, then
two tanh dense layers produce the 128-wide conditioning vector. Total
receptive field: two frames each side.

The pitch period arrives in samples (tens to hundreds); it is scaled by
1/256 on the way in so it lands in the same numeric range as the cepstra
instead of pinning the first tanh layer.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .config import ModelConfig

PITCH_SCALE = 1.0 / 256.0
KERNEL = 3


@dataclass(frozen=True)
class FrnWeights:
    conv1_w: np.ndarray  # (dim, num_features, 3)
    conv1_b: np.ndarray  # (dim,)
    conv2_w: np.ndarray  # (dim, dim, 3)
    conv2_b: np.ndarray
    dense1_w: np.ndarray  # (dim, dim)
    dense1_b: np.ndarray
    dense2_w: np.ndarray
    dense2_b: np.ndarray

    def validate(self, config: ModelConfig) -> None:
        d, nf = config.frn_dim, config.num_features
        expect = {
            "conv1_w": (d, nf, KERNEL), "conv1_b": (d,),
            "conv2_w": (d, d, KERNEL), "conv2_b": (d,),
            "dense1_w": (d, d), "dense1_b": (d,),
            "dense2_w": (d, d), "dense2_b": (d,),
        }
        for f in fields(self):
            arr = getattr(self, f.name)
            if arr.shape != expect[f.name]:
                raise ValueError(f"frn tensor {f.name}: expected shape "
                                 f"{expect[f.name]}, got {arr.shape}")


def _conv1d(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    # x (n, in), w (out, in, 3); zero-padded same-length output
    n = x.shape[0]
    xp = np.vstack([np.zeros((1, x.shape[1])), x, np.zeros((1, x.shape[1]))])
    windows = np.stack([xp[0:n], xp[1:n + 1], xp[2:n + 2]], axis=2)
    return windows.reshape(n, -1) @ w.reshape(w.shape[0], -1).T + b


def frn_forward(features: np.ndarray, weights: FrnWeights,
                config: ModelConfig | None = None) -> np.ndarray:
    """Conditioning vectors (n_frames, 128) for a window of feature rows."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ValueError("expected (n_frames, num_features) features")
    nf = weights.conv1_w.shape[1]
    if features.shape[1] != nf:
        raise ValueError(f"expected {nf} features per frame, "
                         f"got {features.shape[1]}")
    if config is not None:
        weights.validate(config)

    x = features.copy()
    x[:, nf - 2] *= PITCH_SCALE  # pitch period column
    h1 = np.tanh(_conv1d(x, weights.conv1_w.astype(np.float64),
                         weights.conv1_b.astype(np.float64)))
    h2 = np.tanh(_conv1d(h1, weights.conv2_w.astype(np.float64),
                         weights.conv2_b.astype(np.float64)))
    h = h1 + h2
    h = np.tanh(h @ weights.dense1_w.T.astype(np.float64)
                + weights.dense1_b.astype(np.float64))
    h = np.tanh(h @ weights.dense2_w.T.astype(np.float64)
                + weights.dense2_b.astype(np.float64))
    return h.astype(np.float32)
