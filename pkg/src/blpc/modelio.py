"""Weight container, feature file, and WAV input/output.

All formats are little-endian and platform-independent; docs/FORMATS.md
holds the byte-level layout. Summary:

Weight container (magic ``BLPC``, version 1)::

    "BLPC" | u32 version | u32 json_len | config JSON | u32 tensor_count
    tensor*: u16 name_len | name | u8 kind
             kind 0 (dense):  u8 ndim | u32 dims[ndim] | float32 payload
             kind 1 (sparse): u32 rows | u32 cols | u32 block_rows(=16)
                              | u32 nblocks | nblocks * (u32 row_block,
                                u32 col, 16 x float32)
    u32 crc32 over everything after the 8-byte magic+version prefix

The checksum is verified before any parsing, so a truncated or corrupted
file fails closed with no partially-loaded model.

Feature file (magic ``BLPF``)::

    "BLPF" | u32 frame_count | u32 values_per_frame (22) | float32 payload

WAV output is canonical RIFF PCM: mono, 16-bit, 24 kHz.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ModelConfig
from .prng import Rng
from .sparse import BlockSparseMatrix, random_block_sparse

WEIGHT_MAGIC = b"BLPC"
FEATURE_MAGIC = b"BLPF"
WEIGHT_VERSION = 1
WEIGHT_SCALE = 0.1

try:
    from .kernels import numba_backend as _nb
except ImportError:  # pragma: no cover
    _nb = None


class FormatError(Exception):
    """Base for malformed weight/feature/WAV files."""


class BadMagicError(FormatError):
    pass


class VersionError(FormatError):
    pass


class ChecksumError(FormatError):
    pass


class TensorError(FormatError):
    """A required tensor is missing or has the wrong shape."""


# ---------------------------------------------------------------------------
# Tensor manifest: every tensor a config requires, with its exact shape.
# ---------------------------------------------------------------------------


def required_tensors(config: ModelConfig) -> dict:
    """name -> ("dense", shape) or ("sparse", (rows, cols)).

    Layout conventions (all dense weights output-major, i.e. (out, in...)):

    * gru_a.input_w columns: 3*S signal embedding blocks of width
      embed_dim, ordered [samples 0..S-1 | excitations | predictions],
      then the frn_dim conditioning block.
    * gru_b.input_w columns: [conditioning | bunch-GRU state].
    * GRU rows stack the three gates as [update | reset | candidate].
    * fc.* hold one weight set per bunch position (leading S axis).
    """
    c = config
    s, (bh, bl) = c.bunch_size, c.split
    ga, gb, d, emb = c.gru_a_units, c.gru_b_units, c.frn_dim, c.embed_dim
    man: dict = {
        "frn.conv1_w": ("dense", (d, c.num_features, 3)),
        "frn.conv1_b": ("dense", (d,)),
        "frn.conv2_w": ("dense", (d, d, 3)),
        "frn.conv2_b": ("dense", (d,)),
        "frn.dense1_w": ("dense", (d, d)),
        "frn.dense1_b": ("dense", (d,)),
        "frn.dense2_w": ("dense", (d, d)),
        "frn.dense2_b": ("dense", (d,)),
        "emb.signal": ("dense", (c.num_codes, emb)),
        "gru_a.input_w": ("dense", (3 * ga, 3 * s * emb + d)),
        "gru_a.bias": ("dense", (3 * ga,)),
        "gru_a.recurrent": ("sparse", (3 * ga, ga)),
        "gru_b.input_w": ("dense", (3 * gb, d + ga)),
        "gru_b.bias": ("dense", (3 * gb,)),
        "gru_b.recurrent": ("dense", (3 * gb, gb)),
        "fc.high_w1": ("dense", (s, 2 ** bh, gb)),
        "fc.high_w2": ("dense", (s, 2 ** bh, gb)),
        "fc.high_a1": ("dense", (s, 2 ** bh)),
        "fc.high_a2": ("dense", (s, 2 ** bh)),
    }
    if bl > 0:
        man.update({
            "fc.low_w1": ("dense", (s, 2 ** bl, gb)),
            "fc.low_w2": ("dense", (s, 2 ** bl, gb)),
            "fc.low_a1": ("dense", (s, 2 ** bl)),
            "fc.low_a2": ("dense", (s, 2 ** bl)),
            "emb.high": ("dense", (2 ** bh, gb)),
        })
    man["emb.full"] = ("dense", (c.num_codes, gb))
    return man


@dataclass
class WeightStore:
    """A validated set of named tensors plus the config they belong to."""

    config: ModelConfig
    tensors: dict

    def get(self, name: str):
        try:
            return self.tensors[name]
        except KeyError:
            raise TensorError(f"missing tensor {name!r}") from None

    def validate(self) -> None:
        manifest = required_tensors(self.config)
        for name, (kind, shape) in manifest.items():
            if name not in self.tensors:
                raise TensorError(f"missing tensor {name!r}")
            t = self.tensors[name]
            if kind == "dense":
                if isinstance(t, BlockSparseMatrix) or t.shape != shape:
                    got = (t.rows, t.cols) if isinstance(t, BlockSparseMatrix) \
                        else t.shape
                    raise TensorError(
                        f"tensor {name!r}: expected dense shape {shape}, "
                        f"got {got}")
            else:
                if not isinstance(t, BlockSparseMatrix) or \
                        (t.rows, t.cols) != shape:
                    raise TensorError(
                        f"tensor {name!r}: expected block-sparse "
                        f"{shape}, got {getattr(t, 'shape', None) or (t.rows, t.cols)}")
        extra = set(self.tensors) - set(manifest)
        if extra:
            raise TensorError(f"unexpected tensors: {sorted(extra)}")

    # -- serialization ------------------------------------------------------

    def save(self, path) -> None:
        self.validate()
        body = bytearray()
        cfg = json.dumps(self.config.to_dict(), sort_keys=True).encode()
        body += struct.pack("<I", len(cfg)) + cfg
        body += struct.pack("<I", len(self.tensors))
        for name in sorted(self.tensors):
            t = self.tensors[name]
            nb = name.encode()
            body += struct.pack("<H", len(nb)) + nb
            if isinstance(t, BlockSparseMatrix):
                body += struct.pack("<BIIII", 1, t.rows, t.cols, 16,
                                    t.nblocks)
                for b in range(t.nblocks):
                    body += struct.pack("<II", int(t.block_row[b]),
                                        int(t.block_col[b]))
                    body += t.block_vals[b].astype("<f4").tobytes()
            else:
                arr = np.ascontiguousarray(t, dtype="<f4")
                body += struct.pack("<BB", 0, arr.ndim)
                body += struct.pack(f"<{arr.ndim}I", *arr.shape)
                body += arr.tobytes()
        blob = WEIGHT_MAGIC + struct.pack("<I", WEIGHT_VERSION) + bytes(body)
        blob += struct.pack("<I", zlib.crc32(bytes(body)) & 0xFFFFFFFF)
        Path(path).write_bytes(blob)

    @classmethod
    def load(cls, path) -> "WeightStore":
        blob = Path(path).read_bytes()
        if len(blob) < 12 or blob[:4] != WEIGHT_MAGIC:
            raise BadMagicError(f"{path}: not a weight container")
        version = struct.unpack_from("<I", blob, 4)[0]
        if version != WEIGHT_VERSION:
            raise VersionError(
                f"{path}: container version {version}, expected "
                f"{WEIGHT_VERSION}")
        body, stored = blob[8:-4], struct.unpack("<I", blob[-4:])[0]
        if zlib.crc32(body) & 0xFFFFFFFF != stored:
            raise ChecksumError(f"{path}: checksum mismatch (corrupt or "
                                "truncated file)")
        off = 0

        def take(fmt):
            nonlocal off
            vals = struct.unpack_from(fmt, body, off)
            off += struct.calcsize(fmt)
            return vals

        (json_len,) = take("<I")
        config = ModelConfig.from_dict(
            json.loads(body[off:off + json_len].decode()))
        off += json_len
        (count,) = take("<I")
        tensors: dict = {}
        for _ in range(count):
            (name_len,) = take("<H")
            name = body[off:off + name_len].decode()
            off += name_len
            (kind,) = take("<B")
            if kind == 1:
                rows, cols, block_rows, nblocks = take("<IIII")
                if block_rows != 16:
                    raise TensorError(
                        f"tensor {name!r}: unsupported block height "
                        f"{block_rows}")
                rec = np.frombuffer(
                    body, dtype=np.dtype([("r", "<u4"), ("c", "<u4"),
                                          ("v", "<f4", (16,))]),
                    count=nblocks, offset=off)
                off += rec.itemsize * nblocks
                tensors[name] = BlockSparseMatrix(
                    rows=rows, cols=cols,
                    block_row=rec["r"].astype(np.int32),
                    block_col=rec["c"].astype(np.int32),
                    block_vals=np.ascontiguousarray(rec["v"]))
            elif kind == 0:
                (ndim,) = take("<B")
                shape = take(f"<{ndim}I")
                n = int(np.prod(shape, dtype=np.int64))
                arr = np.frombuffer(body, dtype="<f4", count=n, offset=off)
                off += 4 * n
                tensors[name] = arr.reshape(shape).copy()
            else:
                raise TensorError(f"tensor {name!r}: unknown kind {kind}")
        store = cls(config=config, tensors=tensors)
        store.validate()
        return store


# ---------------------------------------------------------------------------
# Deterministic test-weight generation.
# ---------------------------------------------------------------------------


def _fill_uniform(rng: Rng, arr: np.ndarray, lo: float, hi: float) -> None:
    flat = arr.reshape(-1)
    if _nb is not None:
        _nb.rng_fill_uniform(rng.state, flat, lo, hi)
    else:
        rng.fill_uniform(flat, lo, hi)


def generate_test_weights(seed: int, config: ModelConfig,
                          scale: float = WEIGHT_SCALE) -> WeightStore:
    """Random but fully deterministic weights for tests and benchmarks.

    One pinned-PRNG stream fills tensors in manifest order, so a given
    (seed, config) always produces byte-identical stores, with or
    without the JIT present.
    """
    rng = Rng(seed)
    tensors: dict = {}
    for name, (kind, shape) in required_tensors(config).items():
        if kind == "dense":
            arr = np.empty(shape, dtype=np.float32)
            _fill_uniform(rng, arr, -scale, scale)
            tensors[name] = arr
        else:
            rows, cols = shape
            tensors[name] = random_block_sparse(rng, rows, cols,
                                                config.densities, scale=scale)
    store = WeightStore(config=config, tensors=tensors)
    store.validate()
    return store


# ---------------------------------------------------------------------------
# Feature files.
# ---------------------------------------------------------------------------


def write_features(path, features: np.ndarray) -> None:
    feats = np.ascontiguousarray(features, dtype="<f4")
    if feats.ndim != 2:
        raise ValueError("expected (n_frames, values_per_frame) features")
    header = FEATURE_MAGIC + struct.pack("<II", feats.shape[0],
                                         feats.shape[1])
    Path(path).write_bytes(header + feats.tobytes())


def read_features(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) < 12 or blob[:4] != FEATURE_MAGIC:
        raise BadMagicError(f"{path}: not a feature file")
    frames, per_frame = struct.unpack_from("<II", blob, 4)
    expect = 12 + 4 * frames * per_frame
    if len(blob) != expect:
        raise FormatError(
            f"{path}: payload length {len(blob) - 12} does not match "
            f"{frames} frames x {per_frame} values")
    data = np.frombuffer(blob, dtype="<f4", count=frames * per_frame,
                         offset=12)
    return data.reshape(frames, per_frame).astype(np.float32)


def synthetic_features(n_frames: int, seed: int = 0,
                       num_features: int = 22) -> np.ndarray:
    """Slowly-varying feature rows for demos and benchmarks.

    Cepstra follow a smooth random walk, pitch sweeps 80..200 samples
    with moderate correlation. Entirely driven by the pinned PRNG.
    """
    rng = Rng(seed)
    nb = num_features - 2
    feats = np.zeros((n_frames, num_features), dtype=np.float32)
    cep = np.zeros(nb)
    for i in range(n_frames):
        for j in range(nb):
            cep[j] = 0.92 * cep[j] + 0.25 * rng.uniform(-1.0, 1.0)
        feats[i, :nb] = cep
        feats[i, 0] += 1.0  # keep a little energy in the spectrum
        phase = 2.0 * np.pi * i / 97.0
        feats[i, nb] = 140.0 + 60.0 * np.sin(phase)
        feats[i, nb + 1] = 0.5 + 0.4 * np.sin(phase * 1.7)
    return feats


# ---------------------------------------------------------------------------
# WAV.
# ---------------------------------------------------------------------------


def pcm_to_int16(samples: np.ndarray) -> np.ndarray:
    """Round half away from zero and clamp to the 16-bit range."""
    x = np.asarray(samples, dtype=np.float64)
    y = np.where(x >= 0.0, np.floor(x + 0.5), np.ceil(x - 0.5))
    return np.clip(y, -32768, 32767).astype(np.int16)


def write_wav(path, samples: np.ndarray, sample_rate: int = 24000) -> None:
    if samples.dtype != np.int16:
        samples = pcm_to_int16(samples)
    data = samples.astype("<i2").tobytes()
    hdr = b"RIFF" + struct.pack("<I", 36 + len(data)) + b"WAVE"
    hdr += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, sample_rate,
                                 sample_rate * 2, 2, 16)
    hdr += b"data" + struct.pack("<I", len(data))
    Path(path).write_bytes(hdr + data)


def read_wav(path) -> tuple[int, np.ndarray]:
    blob = Path(path).read_bytes()
    if len(blob) < 44 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")
    if blob[12:16] != b"fmt ":
        raise FormatError(f"{path}: missing fmt chunk")
    fmt_size, audio_fmt, channels, rate = struct.unpack_from("<IHHI", blob, 16)
    bits = struct.unpack_from("<H", blob, 34)[0]
    if audio_fmt != 1 or channels != 1 or bits != 16:
        raise FormatError(f"{path}: expected mono 16-bit PCM")
    data_off = 20 + fmt_size
    if blob[data_off:data_off + 4] != b"data":
        raise FormatError(f"{path}: missing data chunk")
    (data_len,) = struct.unpack_from("<I", blob, data_off + 4)
    payload = blob[data_off + 8:data_off + 8 + data_len]
    if len(payload) != data_len:
        raise FormatError(f"{path}: data chunk shorter than declared")
    return rate, np.frombuffer(payload, dtype="<i2").astype(np.int16)
