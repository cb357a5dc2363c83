import struct

import numpy as np
import pytest

from blpc.config import make_config
from blpc.modelio import (
    BadMagicError,
    ChecksumError,
    FormatError,
    TensorError,
    VersionError,
    WeightStore,
    generate_test_weights,
    pcm_to_int16,
    read_features,
    read_wav,
    required_tensors,
    synthetic_features,
    write_features,
    write_wav,
)
from blpc.sparse import BlockSparseMatrix


@pytest.fixture(scope="module")
def store():
    return generate_test_weights(5, make_config(2, (7, 4)))


def test_store_roundtrip_bitexact(store, tmp_path):
    p = tmp_path / "w.blpcw"
    store.save(p)
    back = WeightStore.load(p)
    assert back.config == store.config
    assert set(back.tensors) == set(store.tensors)
    for name, t in store.tensors.items():
        u = back.tensors[name]
        if isinstance(t, BlockSparseMatrix):
            assert np.array_equal(t.block_row, u.block_row)
            assert np.array_equal(t.block_col, u.block_col)
            assert np.array_equal(t.block_vals, u.block_vals)
            assert (t.rows, t.cols) == (u.rows, u.cols)
        else:
            assert np.array_equal(t, u)
            assert u.dtype == np.float32


def test_save_is_deterministic(store, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    store.save(a)
    store.save(b)
    assert a.read_bytes() == b.read_bytes()


def test_corrupt_payload_fails_checksum(store, tmp_path):
    p = tmp_path / "w.blpcw"
    store.save(p)
    blob = bytearray(p.read_bytes())
    blob[len(blob) // 2] ^= 0xFF
    p.write_bytes(bytes(blob))
    with pytest.raises(ChecksumError):
        WeightStore.load(p)


def test_truncation_fails_checksum(store, tmp_path):
    p = tmp_path / "w.blpcw"
    store.save(p)
    p.write_bytes(p.read_bytes()[:-100])
    with pytest.raises(ChecksumError):
        WeightStore.load(p)


def test_bad_magic(tmp_path):
    p = tmp_path / "w.blpcw"
    p.write_bytes(b"NOPE" + bytes(100))
    with pytest.raises(BadMagicError):
        WeightStore.load(p)
    with pytest.raises(BadMagicError):
        WeightStore.load(tmp_path / "short.blpcw") \
            if (tmp_path / "short.blpcw").write_bytes(b"xy") else None


def test_wrong_version(store, tmp_path):
    p = tmp_path / "w.blpcw"
    store.save(p)
    blob = bytearray(p.read_bytes())
    struct.pack_into("<I", blob, 4, 99)
    # keep the checksum honest: it covers the body only, not the header
    p.write_bytes(bytes(blob))
    with pytest.raises(VersionError):
        WeightStore.load(p)


def test_missing_tensor_rejected(store):
    broken = WeightStore(config=store.config, tensors=dict(store.tensors))
    del broken.tensors["gru_b.bias"]
    with pytest.raises(TensorError):
        broken.validate()


def test_extra_tensor_rejected(store):
    broken = WeightStore(config=store.config, tensors=dict(store.tensors))
    broken.tensors["mystery"] = np.zeros(3, np.float32)
    with pytest.raises(TensorError):
        broken.validate()


def test_wrong_shape_rejected(store):
    broken = WeightStore(config=store.config, tensors=dict(store.tensors))
    broken.tensors["frn.dense1_b"] = np.zeros(7, np.float32)
    with pytest.raises(TensorError):
        broken.validate()


def test_manifest_covers_generated_tensors(store):
    manifest = required_tensors(store.config)
    assert set(manifest) == set(store.tensors)
    kind, shape = manifest["gru_a.recurrent"]
    assert kind == "sparse"
    assert shape == (3 * 384, 384)


def test_generate_is_deterministic():
    cfg = make_config(3, (8, 0))
    a = generate_test_weights(11, cfg)
    b = generate_test_weights(11, cfg)
    for name in a.tensors:
        t, u = a.tensors[name], b.tensors[name]
        if isinstance(t, BlockSparseMatrix):
            assert np.array_equal(t.block_vals, u.block_vals)
        else:
            assert np.array_equal(t, u)
    c = generate_test_weights(12, cfg)
    assert not np.array_equal(a.tensors["frn.dense1_w"],
                              c.tensors["frn.dense1_w"])


def test_features_roundtrip(tmp_path):
    feats = synthetic_features(17, seed=4)
    p = tmp_path / "f.blpf"
    write_features(p, feats)
    back = read_features(p)
    assert back.dtype == np.float32
    assert np.array_equal(back, feats)


def test_features_length_check(tmp_path):
    p = tmp_path / "f.blpf"
    write_features(p, synthetic_features(5))
    p.write_bytes(p.read_bytes() + b"\x00\x00\x00\x00")
    with pytest.raises(FormatError):
        read_features(p)
    p.write_bytes(b"BLPX" + bytes(20))
    with pytest.raises(BadMagicError):
        read_features(p)


def test_write_features_validates_rank(tmp_path):
    with pytest.raises(ValueError):
        write_features(tmp_path / "f", np.zeros(22, np.float32))


def test_synthetic_features_properties():
    feats = synthetic_features(50, seed=0)
    assert feats.shape == (50, 22)
    assert np.array_equal(feats, synthetic_features(50, seed=0))
    assert not np.array_equal(feats, synthetic_features(50, seed=1))
    assert feats[:, 20].min() >= 80.0 - 1.0
    assert feats[:, 20].max() <= 200.0 + 1.0
    # longer run starts with the same prefix
    assert np.array_equal(synthetic_features(60, seed=0)[:50], feats)


def test_pcm_to_int16_rounding():
    x = np.array([0.4, 0.5, -0.5, -0.4, 1.5, -1.5, 40000.0, -40000.0])
    got = pcm_to_int16(x)
    assert got.tolist() == [0, 1, -1, 0, 2, -2, 32767, -32768]
    assert got.dtype == np.int16


def test_wav_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    pcm = rng.integers(-32768, 32768, 1000).astype(np.int16)
    p = tmp_path / "a.wav"
    write_wav(p, pcm)
    rate, back = read_wav(p)
    assert rate == 24000
    assert np.array_equal(back, pcm)


def test_wav_rejects_junk(tmp_path):
    p = tmp_path / "junk.wav"
    p.write_bytes(b"RIFF" + bytes(50))
    with pytest.raises(FormatError):
        read_wav(p)
