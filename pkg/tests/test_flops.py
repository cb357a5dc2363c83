from fractions import Fraction

import pytest

from blpc.config import all_benchmark_configs, make_config
from blpc.flops import (
    ACT_FLOPS,
    LOOKUP_FLOPS,
    MAC_FLOPS,
    FlopReport,
    LayerCost,
    count_flops,
    predicted_cr,
)


def cfg(s, split):
    return make_config(s, split)


def test_dual_fc_cost_depends_only_on_split():
    # full 8-bit softmax: 2 nets x 16 units x 256 outputs
    assert count_flops(cfg(1, (8, 0))).dual_fc_macs_per_sample == 8192
    assert count_flops(cfg(4, (8, 0))).dual_fc_macs_per_sample == 8192
    # split 7+4: 2x16x128 + 2x16x16
    assert count_flops(cfg(1, (7, 4))).dual_fc_macs_per_sample == 4608
    assert count_flops(cfg(4, (7, 4))).dual_fc_macs_per_sample == 4608


def test_all_counts_are_exact_integers():
    for c in all_benchmark_configs():
        r = count_flops(c)
        for layer in r.layers:
            for field in ("macs", "adds", "acts", "lookup_adds"):
                assert isinstance(getattr(layer, field), int)
        assert isinstance(r.macs_per_frame, int)
        assert isinstance(r.weighted_per_frame, int)


def test_network_split_partitions_total():
    for c in all_benchmark_configs():
        r = count_flops(c)
        assert r.frn_macs_per_frame + r.srn_macs_per_frame \
            == r.macs_per_frame
        assert r.frn_macs_per_frame == 8448 + 49152 + 16384 + 16384


def test_recurrent_sparse_macs():
    r = count_flops(cfg(1, (8, 0)))
    # 92 + 92 + 922 16-wide blocks at the target densities
    assert r.layer("srn.gru_a_recurrent").macs == 16 * 1106
    assert r.per_sample("srn.gru_a_recurrent") == Fraction(17696, 1)
    # at S=4 the same per-step cost amortizes over four samples
    r4 = count_flops(cfg(4, (8, 0)))
    assert r4.per_sample("srn.gru_a_recurrent") == Fraction(17696, 4)


def test_per_sample_is_exact_fraction():
    r = count_flops(cfg(3, (8, 0)))
    v = r.per_sample("srn.gru_b_input")
    assert isinstance(v, Fraction)
    assert v == Fraction((3 * 16 * 384 + 3 * 16) * 80, 240)
    with pytest.raises(KeyError):
        r.layer("srn.nonexistent")


def test_weighted_pools():
    layer = LayerCost("x", "srn", "sample", macs=10, adds=3, acts=2,
                      lookup_adds=5)
    assert layer.weighted() == (MAC_FLOPS * 10 + 3 + ACT_FLOPS * 2
                                + LOOKUP_FLOPS * 5)


def test_frame_counts_scale_with_rate():
    r = count_flops(cfg(2, (8, 0)))
    lk = r.layer("srn.input_lookup")
    assert lk.rate == "step"
    # 120 steps per frame at S=2
    assert lk.lookup_adds * lk.multiplier(r.config) \
        == 3 * 2 * 3 * 384 * 120


def test_baseline_cr_is_exactly_one():
    assert predicted_cr(cfg(1, (8, 0))) == 1.0


def test_predicted_cr_pinned_values():
    # regression pins for the calibrated weights; the headline doubling
    # figure must stay inside the published band
    assert abs(predicted_cr(cfg(2, (8, 0))) - 0.662675) < 5e-4
    assert abs(predicted_cr(cfg(2, (8, 0))) - 0.72) <= 0.10
    assert abs(predicted_cr(cfg(1, (7, 4))) - 0.907193) < 5e-4


def test_cr_monotone_in_bunch_size():
    for split in ((8, 0), (7, 4)):
        crs = [predicted_cr(cfg(s, split)) for s in (1, 2, 3, 4)]
        assert all(a > b for a, b in zip(crs, crs[1:])), crs
        assert all(0.0 < v <= 1.0 for v in crs)


def test_split_softmax_relative_gain_grows_with_bunching():
    def rel_gain(s):
        full = predicted_cr(cfg(s, (8, 0)))
        split = predicted_cr(cfg(s, (7, 4)))
        return (full - split) / full

    gains = [rel_gain(s) for s in (1, 2, 3, 4)]
    assert all(a < b for a, b in zip(gains, gains[1:])), gains
    assert gains[0] == pytest.approx(0.0928, abs=2e-3)
    assert gains[3] == pytest.approx(0.1879, abs=2e-3)


def test_report_dict_shape():
    r = count_flops(cfg(4, (7, 4)))
    d = r.to_dict()
    assert d["config"] == "S4-B(7,4)"
    assert d["dual_fc_macs_per_sample"] == 4608
    assert set(d["layers"]) == {l.name for l in r.layers}
    assert len(r.layers) == 18
    assert d["macs_per_frame"] == r.macs_per_frame


def test_custom_baseline():
    a = cfg(4, (7, 4))
    assert predicted_cr(a, baseline=a) == 1.0
    vs_s2 = predicted_cr(a, baseline=cfg(2, (8, 0)))
    assert vs_s2 == pytest.approx(
        count_flops(a).weighted_per_frame
        / count_flops(cfg(2, (8, 0))).weighted_per_frame)
