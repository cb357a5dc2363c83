"""Scaled mu-law quantization and bit-bunch code packing.

A ``MuLawSpec`` maps 16-bit linear PCM to ``B``-bit codes through a
logarithmic compander. The slope factor ``w_s`` scales only the ``V_m``
constant inside the logarithms; the output offset/range constant ``V_m2``
stays ``2**(B-1)`` so codes always span ``[0, 2**B)``. Shrinking ``w_s``
flattens the curve near zero, which keeps the quantization step above one
PCM unit for wide codes (``B > 9``) and makes every code round-trip.

Encoding (x in [-32768, 32767]):

    y = V_m2 + round(sign(x) * V_m2 * ln(1 + s1*|x|) / ln(V_m))

Decoding (u = y - V_m2):

    x = round(sign(u) * s2 * (exp(ln(V_m) * |u| / V_m2) - 1))

with V_m = w_s * 2**B, s1 = (V_m - 1) / 2**15, s2 = 2**15 / (V_m - 1).

Rounding is half-away-from-zero, applied to the signed magnitude before
the offset is added, so the mapping is exactly sign-symmetric about the
zero code ``2**(B-1)``.

All functions are pure; they are safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "MuLawSpec",
    "BitSplit",
    "encode",
    "decode",
    "split_code",
    "recombine",
    "step_audit",
]

PCM_MIN = -32768
PCM_MAX = 32767


def round_away(v: float) -> int:
    """Round half away from zero (symmetric, unlike banker's rounding)."""
    if v >= 0.0:
        return int(math.floor(v + 0.5))
    return int(math.ceil(v - 0.5))


@dataclass(frozen=True)
class BitSplit:
    """High/low split of a B-bit excitation code."""

    high_bits: int
    low_bits: int

    def __post_init__(self):
        if self.high_bits < 1 or self.low_bits < 0:
            raise ValueError(f"invalid bit split ({self.high_bits}, {self.low_bits})")

    def __iter__(self):
        yield self.high_bits
        yield self.low_bits

    @property
    def total_bits(self) -> int:
        return self.high_bits + self.low_bits

    @property
    def is_split(self) -> bool:
        return self.low_bits > 0


@dataclass(frozen=True)
class MuLawSpec:
    """Parameters of the scaled mu-law mapping for one code width."""

    bits: int
    slope: float = 1.0
    # derived constants, filled in __post_init__
    v_m: float = field(init=False, repr=False)
    v_m2: int = field(init=False, repr=False)
    s1: float = field(init=False, repr=False)
    s2: float = field(init=False, repr=False)

    def __post_init__(self):
        if not (8 <= self.bits <= 16):
            raise ValueError(f"bits must be in [8, 16], got {self.bits}")
        if not (0.0 < self.slope <= 1.0):
            raise ValueError(f"slope must be in (0, 1], got {self.slope}")
        object.__setattr__(self, "v_m", self.slope * float(2**self.bits))
        object.__setattr__(self, "v_m2", 2 ** (self.bits - 1))
        object.__setattr__(self, "s1", (self.v_m - 1.0) / 32768.0)
        object.__setattr__(self, "s2", 32768.0 / (self.v_m - 1.0))

    @property
    def num_codes(self) -> int:
        return 2**self.bits

    @property
    def zero_code(self) -> int:
        """Code that decodes to exactly 0."""
        return self.v_m2

    @classmethod
    def for_split(cls, split: BitSplit) -> "MuLawSpec":
        """Default spec for a bit split: plain 8-bit mu-law for (8, 0),
        slope 0.08 for the wide 11-bit (7, 4) configuration."""
        if split.total_bits == 8:
            return cls(bits=8, slope=1.0)
        if (split.high_bits, split.low_bits) == (7, 4):
            return cls(bits=11, slope=0.08)
        return cls(bits=split.total_bits, slope=1.0)


def encode(x: float, spec: MuLawSpec) -> int:
    """Quantize a linear PCM value to a mu-law code in [0, 2**B).

    Out-of-range inputs are clamped; the result is clamped to the code
    range (the top code saturates when slope < 1 compresses the curve).
    """
    if x > PCM_MAX:
        x = float(PCM_MAX)
    elif x < PCM_MIN:
        x = float(PCM_MIN)
    mag = spec.v_m2 * math.log(1.0 + spec.s1 * abs(x)) / math.log(spec.v_m)
    y = spec.v_m2 + round_away(math.copysign(mag, x))
    if y < 0:
        return 0
    if y >= spec.num_codes:
        return spec.num_codes - 1
    return y


def decode(y: int, spec: MuLawSpec) -> int:
    """Expand a mu-law code back to a linear PCM value (rounded int).

    Raises ValueError for codes outside [0, 2**B).
    """
    if not (0 <= y < spec.num_codes):
        raise ValueError(f"code {y} out of range [0, {spec.num_codes})")
    u = y - spec.v_m2
    mag = spec.s2 * (math.exp(math.log(spec.v_m) * abs(u) / spec.v_m2) - 1.0)
    x = round_away(math.copysign(mag, u)) if u != 0 else 0
    if x < PCM_MIN:
        return PCM_MIN
    if x > PCM_MAX:
        return PCM_MAX
    return x


def split_code(e: int, split: BitSplit) -> tuple[int, int]:
    """Split a full code into (high, low) bunches: e_h = e >> B_l, e_l = e & mask."""
    return e >> split.low_bits, e & ((1 << split.low_bits) - 1)


def recombine(e_h: int, e_l: int, split: BitSplit) -> int:
    """Inverse of split_code: e = 2**B_l * e_h + e_l. Validates ranges."""
    if not (0 <= e_h < (1 << split.high_bits)):
        raise ValueError(f"high code {e_h} out of range [0, {1 << split.high_bits})")
    if not (0 <= e_l < (1 << split.low_bits)):
        raise ValueError(f"low code {e_l} out of range [0, {1 << split.low_bits})")
    return (e_h << split.low_bits) + e_l


def step_audit(spec: MuLawSpec) -> dict:
    """Exhaustive round-trip and step-size audit over all codes.

    Returns a report dict with the list of collapsed codes (codes y where
    encode(decode(y)) != y, i.e. several codes map to the same PCM value)
    and the minimum decode step between adjacent codes.
    """
    collapsed = []
    min_step = None
    prev = None
    for y in range(spec.num_codes):
        x = decode(y, spec)
        if encode(float(x), spec) != y:
            collapsed.append(y)
        if prev is not None:
            step = x - prev
            if min_step is None or step < min_step:
                min_step = step
        prev = x
    return {
        "bits": spec.bits,
        "slope": spec.slope,
        "num_codes": spec.num_codes,
        "collapsed_codes": collapsed,
        "min_decode_step": min_step,
        "roundtrip_ok": not collapsed,
    }
