"""Model configuration: every architectural hyperparameter in one place."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

from .codec import BitSplit, MuLawSpec

# Sample bunching sizes supported by the weight format. All of them divide
# the frame size, so a frame is always a whole number of bunches.
VALID_BUNCH_SIZES = (1, 2, 3, 4)
VALID_SPLITS = ((8, 0), (7, 4))


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and quantization parameters of one model.

    The defaults describe the reference configuration: 24 kHz audio,
    10 ms frames (240 samples), a 384-unit bunch GRU with block-sparse
    recurrent weights, a 16-unit context GRU, and order-16 linear
    prediction.
    """

    bunch_size: int = 1  # samples generated per network step (S)
    high_bits: int = 8
    low_bits: int = 0
    slope: float = 1.0  # mu-law slope factor w_s
    gru_a_units: int = 384
    gru_b_units: int = 16
    frn_dim: int = 128
    embed_dim: int = 128
    lpc_order: int = 16
    frame_size: int = 240
    sample_rate: int = 24000
    num_features: int = 22  # 20 cepstra + pitch period + pitch correlation
    num_cepstra: int = 20
    sparsity: tuple[float, float, float] = (0.99, 0.99, 0.9)
    seed: int = 0

    def __post_init__(self):
        if self.bunch_size not in VALID_BUNCH_SIZES:
            raise ValueError(
                f"bunch_size must be one of {VALID_BUNCH_SIZES}, got {self.bunch_size}"
            )
        if (self.high_bits, self.low_bits) not in VALID_SPLITS:
            raise ValueError(
                f"bit split must be one of {VALID_SPLITS}, "
                f"got ({self.high_bits}, {self.low_bits})"
            )
        if self.frame_size % self.bunch_size != 0:
            raise ValueError(
                f"frame_size {self.frame_size} not divisible by bunch_size {self.bunch_size}"
            )
        for name in ("gru_a_units", "gru_b_units", "frn_dim", "embed_dim",
                     "lpc_order", "frame_size", "sample_rate"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not all(0.0 <= s <= 1.0 for s in self.sparsity):
            raise ValueError(f"sparsity values must be in [0, 1], got {self.sparsity}")

    @property
    def split(self) -> BitSplit:
        return BitSplit(self.high_bits, self.low_bits)

    @property
    def bits(self) -> int:
        return self.high_bits + self.low_bits

    @property
    def mu_spec(self) -> MuLawSpec:
        return MuLawSpec(bits=self.bits, slope=self.slope)

    @property
    def num_codes(self) -> int:
        return 2**self.bits

    @property
    def num_input_signals(self) -> int:
        """Signals fed to the bunch GRU per step: S samples, S excitations,
        S predictions."""
        return 3 * self.bunch_size

    @property
    def steps_per_frame(self) -> int:
        return self.frame_size // self.bunch_size

    @property
    def densities(self) -> tuple[float, float, float]:
        return tuple(1.0 - s for s in self.sparsity)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sparsity"] = list(self.sparsity)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["sparsity"] = tuple(d["sparsity"])
        return cls(**d)

    def label(self) -> str:
        return f"S{self.bunch_size}-B({self.high_bits},{self.low_bits})"


def make_config(bunch_size: int, split: tuple[int, int], seed: int = 0) -> ModelConfig:
    """Standard config for one of the eight benchmark points."""
    high, low = split
    slope = MuLawSpec.for_split(BitSplit(high, low)).slope
    return ModelConfig(
        bunch_size=bunch_size, high_bits=high, low_bits=low, slope=slope, seed=seed
    )


def all_benchmark_configs(seed: int = 0) -> list[ModelConfig]:
    """The S in {1..4} x split in {(8,0),(7,4)} grid, baseline first."""
    return [
        make_config(s, split, seed=seed)
        for s in VALID_BUNCH_SIZES
        for split in VALID_SPLITS
    ]
