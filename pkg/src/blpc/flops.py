"""Analytic cost model: exact op counts per config and predicted complexity.

Counts are integers derived from the configuration alone, never measured.
Each layer is tallied at its native rate (once per frame, once per network
step, or once per sample); per-frame totals are therefore exact integers
and per-sample figures are the per-frame totals divided by the frame size.

Lookup-table contributions are additions, not multiplies, and are kept in
their own pool: they touch one random table row per signal, so their cost
per element is memory-latency bound rather than FMA bound.

The single-number "weighted" cost converts the pools into flop
equivalents for complexity-ratio prediction. The weights are calibration
constants, not measurements: a MAC is 2 flops; a transcendental
(tanh/sigmoid/exp through libm) is ACT_FLOPS; a lookup add is
LOOKUP_FLOPS. They describe a scalar-heavy x86 core and are deliberately
coarse; predicted ratios land within a few points of measured wall-clock
ratios, which is all the model is for.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .config import ModelConfig
from .sparse import target_block_counts

MAC_FLOPS = 2
ACT_FLOPS = 16
LOOKUP_FLOPS = 4

_RATES = ("frame", "step", "sample")


@dataclass(frozen=True)
class LayerCost:
    """Op counts for one layer at its native invocation rate."""

    name: str
    network: str  # "frn" or "srn"
    rate: str     # "frame", "step", or "sample"
    macs: int = 0
    adds: int = 0
    acts: int = 0
    lookup_adds: int = 0

    def multiplier(self, config: ModelConfig) -> int:
        if self.rate == "frame":
            return 1
        if self.rate == "step":
            return config.steps_per_frame
        return config.frame_size

    def weighted(self) -> int:
        return (MAC_FLOPS * self.macs + self.adds + ACT_FLOPS * self.acts
                + LOOKUP_FLOPS * self.lookup_adds)


@dataclass(frozen=True)
class FlopReport:
    """Per-layer op counts for one config, with per-frame exact totals."""

    config: ModelConfig
    layers: tuple[LayerCost, ...]

    def _total(self, field: str, network: str | None = None) -> int:
        return sum(getattr(l, field) * l.multiplier(self.config)
                   for l in self.layers
                   if network is None or l.network == network)

    @property
    def macs_per_frame(self) -> int:
        return self._total("macs")

    @property
    def adds_per_frame(self) -> int:
        return self._total("adds")

    @property
    def acts_per_frame(self) -> int:
        return self._total("acts")

    @property
    def lookup_adds_per_frame(self) -> int:
        return self._total("lookup_adds")

    @property
    def frn_macs_per_frame(self) -> int:
        return self._total("macs", "frn")

    @property
    def srn_macs_per_frame(self) -> int:
        return self._total("macs", "srn")

    @property
    def weighted_per_frame(self) -> int:
        return sum(l.weighted() * l.multiplier(self.config)
                   for l in self.layers)

    @property
    def macs_per_sample(self) -> float:
        return self.macs_per_frame / self.config.frame_size

    @property
    def dual_fc_macs_per_sample(self) -> int:
        return self.layer("srn.dual_fc").macs

    def layer(self, name: str) -> LayerCost:
        for l in self.layers:
            if l.name == name:
                return l
        raise KeyError(name)

    def per_sample(self, name: str) -> Fraction:
        """Exact per-sample average for one layer."""
        l = self.layer(name)
        ops = l.macs + l.adds + l.acts + l.lookup_adds
        return Fraction(ops * l.multiplier(self.config),
                        self.config.frame_size)

    def to_dict(self) -> dict:
        return {
            "config": self.config.label(),
            "macs_per_frame": self.macs_per_frame,
            "adds_per_frame": self.adds_per_frame,
            "acts_per_frame": self.acts_per_frame,
            "lookup_adds_per_frame": self.lookup_adds_per_frame,
            "frn_macs_per_frame": self.frn_macs_per_frame,
            "srn_macs_per_frame": self.srn_macs_per_frame,
            "weighted_per_frame": self.weighted_per_frame,
            "dual_fc_macs_per_sample": self.dual_fc_macs_per_sample,
            "layers": {
                l.name: {"rate": l.rate, "macs": l.macs, "adds": l.adds,
                         "acts": l.acts, "lookup_adds": l.lookup_adds}
                for l in self.layers
            },
        }


def count_flops(config: ModelConfig) -> FlopReport:
    c = config
    ga, gb = c.gru_a_units, c.gru_b_units
    d = c.embed_dim
    nf = c.num_features
    fd = c.frn_dim
    s = c.bunch_size
    kh = 1 << c.high_bits
    kl = (1 << c.low_bits) if c.low_bits else 0
    k = kh + kl

    blocks = sum(target_block_counts(3 * ga, ga, c.densities))
    # one 16x1 block = 16 MACs
    grua_rec_macs = 16 * blocks

    layers = (
        # frame-rate conditioning stack: two 1D convs (kernel 3, same
        # width) with a residual join, then two dense tanh layers
        LayerCost("frn.conv1", "frn", "frame",
                  macs=fd * nf * 3, adds=fd, acts=fd),
        LayerCost("frn.conv2", "frn", "frame",
                  macs=fd * fd * 3, adds=2 * fd, acts=fd),
        LayerCost("frn.dense1", "frn", "frame",
                  macs=fd * fd, adds=fd, acts=fd),
        LayerCost("frn.dense2", "frn", "frame",
                  macs=fd * fd, adds=fd, acts=fd),
        # dense frame-vector contribution to each GRU's input, once per
        # frame (bias add folded in)
        LayerCost("srn.cond_a", "srn", "frame",
                  macs=3 * ga * fd, adds=3 * ga),
        LayerCost("srn.cond_b", "srn", "frame",
                  macs=3 * gb * fd, adds=3 * gb),
        # per network step
        LayerCost("srn.gru_a_recurrent", "srn", "step",
                  macs=grua_rec_macs),
        LayerCost("srn.gru_a_gates", "srn", "step",
                  macs=3 * ga, adds=ga, acts=3 * ga),
        # 3S table rows added into the gate pre-activations; the S
        # prediction signals are mu-law encoded first
        LayerCost("srn.input_lookup", "srn", "step",
                  adds=4 * s, acts=s, lookup_adds=3 * s * 3 * ga),
        LayerCost("srn.gru_b_input", "srn", "step",
                  macs=3 * gb * ga, adds=3 * gb),
        LayerCost("srn.gru_b_recurrent", "srn", "step",
                  macs=3 * gb * gb),
        LayerCost("srn.gru_b_gates", "srn", "step",
                  macs=3 * gb, adds=gb, acts=3 * gb),
        # per sample
        LayerCost("srn.dual_fc", "srn", "sample",
                  macs=2 * gb * kh + 2 * gb * kl, acts=2 * k),
        LayerCost("srn.output_scale", "srn", "sample", macs=2 * k),
        LayerCost("srn.sampling", "srn", "sample",
                  adds=2 * k + 2, acts=k),
        LayerCost("srn.embedding_update", "srn", "sample",
                  adds=3 * gb if c.low_bits else gb),
        LayerCost("srn.lpc", "srn", "sample", macs=c.lpc_order),
        LayerCost("srn.codec", "srn", "sample", adds=10, acts=2),
    )
    return FlopReport(config=c, layers=layers)


def predicted_cr(config: ModelConfig,
                 baseline: ModelConfig | None = None) -> float:
    """Predicted complexity ratio vs the S=1,(8,0) baseline."""
    if baseline is None:
        baseline = ModelConfig(bunch_size=1, high_bits=8, low_bits=0,
                               slope=1.0, seed=config.seed)
    num = count_flops(config).weighted_per_frame
    den = count_flops(baseline).weighted_per_frame
    return num / den
