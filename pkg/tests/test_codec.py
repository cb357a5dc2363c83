import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from blpc.codec import (BitSplit, MuLawSpec, decode, encode, recombine,
                        round_away, split_code, step_audit)


def test_wide_spec_known_codes():
    # 11-bit unscaled curve: zero maps to the mid code, +1 lands 8 above
    spec = MuLawSpec(bits=11, slope=1.0)
    assert encode(0.0, spec) == 1024
    assert encode(1.0, spec) == 1032
    assert decode(1024, spec) == 0


def test_wide_spec_negative_mirror():
    spec = MuLawSpec(bits=11, slope=1.0)
    assert encode(-1.0, spec) == 2 * 1024 - 1032
    for y in (1025, 1200, 2047):
        assert decode(1024 - (y - 1024), spec) == -decode(y, spec)


def test_scaled_roundtrip_exhaustive():
    spec = MuLawSpec(bits=11, slope=0.08)
    for y in range(spec.num_codes):
        assert encode(float(decode(y, spec)), spec) == y


def test_classic_8bit_roundtrip():
    spec = MuLawSpec(bits=8, slope=1.0)
    audit = step_audit(spec)
    assert audit["roundtrip_ok"]
    assert audit["min_decode_step"] >= 1


def test_unscaled_11bit_collapses():
    audit = step_audit(MuLawSpec(bits=11, slope=1.0))
    assert not audit["roundtrip_ok"]
    assert audit["min_decode_step"] < 1
    assert len(audit["collapsed_codes"]) > 100


def test_slope_only_scales_v_m():
    hi = MuLawSpec(bits=11, slope=0.08)
    assert hi.v_m == pytest.approx(0.08 * 2048)
    assert hi.v_m2 == 1024  # offset term stays at 2^(B-1)


def test_encode_clamps_out_of_range():
    spec = MuLawSpec(bits=8)
    assert encode(1e9, spec) == encode(32767.0, spec)
    assert encode(-1e9, spec) == encode(-32768.0, spec)


def test_decode_rejects_bad_code():
    spec = MuLawSpec(bits=8)
    with pytest.raises(ValueError):
        decode(-1, spec)
    with pytest.raises(ValueError):
        decode(256, spec)


def test_round_away_halves():
    assert round_away(0.5) == 1
    assert round_away(-0.5) == -1
    assert round_away(2.5) == 3
    assert round_away(-2.5) == -3
    assert round_away(2.4) == 2


@given(st.integers(min_value=0, max_value=2047))
def test_split_recombine_roundtrip(e):
    split = BitSplit(7, 4)
    hi, lo = split_code(e, split)
    assert recombine(hi, lo, split) == e
    assert 0 <= hi < 128 and 0 <= lo < 16


def test_recombine_validates_ranges():
    split = BitSplit(7, 4)
    with pytest.raises(ValueError):
        recombine(128, 0, split)
    with pytest.raises(ValueError):
        recombine(0, 16, split)


def test_spec_for_split_defaults():
    assert MuLawSpec.for_split(BitSplit(8, 0)) == MuLawSpec(bits=8, slope=1.0)
    assert MuLawSpec.for_split(BitSplit(7, 4)) == MuLawSpec(bits=11,
                                                            slope=0.08)


def test_encode_monotone_nondecreasing():
    spec = MuLawSpec(bits=11, slope=0.08)
    xs = np.linspace(-32768, 32767, 4001)
    codes = [encode(float(x), spec) for x in xs]
    assert all(b >= a for a, b in zip(codes, codes[1:]))


def test_kernel_codec_matches_reference():
    # compiled scalar codec must agree with the python reference,
    # code-for-code, on every code and a dense grid of inputs
    from blpc import kernels

    kb = kernels.numba_backend if kernels.HAVE_NUMBA else \
        kernels.numpy_backend

    for spec in (MuLawSpec(bits=8), MuLawSpec(bits=11, slope=0.08)):
        ln_vm = math.log(spec.v_m)
        for y in range(spec.num_codes):
            assert kb.mu_decode(y, spec.v_m2, ln_vm, spec.s2) == decode(
                y, spec)
        for x in np.linspace(-32768.0, 32767.0, 1501):
            assert kb.mu_encode(float(x), spec.v_m2, ln_vm, spec.s1,
                                spec.num_codes) == encode(float(x), spec)
