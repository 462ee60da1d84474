"""Profiler: ACT_max extraction, histograms, overflow accounting."""

import numpy as np
import pytest

from faultclip.errors import ConfigError
from faultclip.faults import FaultSpec, draw_mask
from faultclip.model import forward, set_thresholds
from faultclip.profiling import activation_histogram, load_profile, profile, save_profile

from util import build_fc_model

# frozen from an independent layer-by-layer forward pass over the canonical
# calibration split (seed 2024, first 128 samples)
ACT_MAX_GOLDEN = (5.299984931945801, 17.56785774230957, 32.5042839050293)


def _zero_bias_net():
    rng = np.random.default_rng(1)
    w1 = rng.normal(size=(4, 6)).astype(np.float32)
    w2 = rng.normal(size=(3, 4)).astype(np.float32)
    return build_fc_model([w1, w2], [np.zeros(4, np.float32), np.zeros(3, np.float32)])


def _samples(images, labels=None):
    from faultclip.data import LabeledSample

    return [
        LabeledSample(np.asarray(img, dtype=np.float32), 0 if labels is None else labels[i])
        for i, img in enumerate(images)
    ]


class TestProfile:
    def test_zero_input_zero_actmax(self):
        m = _zero_bias_net()
        prof = profile(m, _samples([np.zeros(6)]))
        assert prof.act_max == (0.0,)

    def test_single_sample_reduces_to_forward_max(self, fixture_model, calibration):
        sample = calibration[0]
        prof = profile(fixture_model, [sample])
        _, taps = forward(
            fixture_model,
            sample.image[None],
            collect=fixture_model.activation_layer_indices,
        )
        for lp in prof.layer_profiles:
            assert lp.act_max == float(np.max(taps[lp.layer_index]))

    def test_fixture_actmax_matches_golden(self, fixture_profile):
        assert fixture_profile.act_max == pytest.approx(ACT_MAX_GOLDEN, rel=1e-6)

    def test_order_independent(self, fixture_model, calibration):
        shuffled = list(calibration)
        np.random.default_rng(0).shuffle(shuffled)
        a = profile(fixture_model, calibration)
        b = profile(fixture_model, shuffled)
        assert a.act_max == b.act_max
        for la, lb in zip(a.layer_profiles, b.layer_profiles):
            assert la.counts == lb.counts and la.overflow == lb.overflow

    def test_partitioning_independent(self, fixture_model, calibration, monkeypatch):
        # the max/histogram merge is exact; float32 batched matmuls round
        # differently when the batch shape changes, hence the tolerance
        import faultclip.profiling as profiling

        a = profile(fixture_model, calibration)
        orig = profiling._collect_activations

        def small_chunks(model, samples, mask=None, layer_indices=None, chunk=64):
            return orig(model, samples, mask=mask, layer_indices=layer_indices, chunk=7)

        monkeypatch.setattr(profiling, "_collect_activations", small_chunks)
        b = profile(fixture_model, calibration)
        assert b.act_max == pytest.approx(a.act_max, rel=1e-6)
        for la, lb in zip(a.layer_profiles, b.layer_profiles):
            assert sum(la.counts) + la.overflow == sum(lb.counts) + lb.overflow

    def test_histogram_counts_sum_to_element_count(self, fixture_model, fixture_profile):
        # activation layers sit at indices 1, 4, 8 of the fixture graph
        per_sample = {1: 4 * 24 * 24, 4: 8 * 8 * 8, 8: 32}
        for lp in fixture_profile.layer_profiles:
            total = sum(lp.counts) + lp.underflow + lp.overflow
            assert total == 128 * per_sample[lp.layer_index]
            assert lp.overflow == 0 and lp.underflow == 0  # clean run

    def test_p999_below_max(self, fixture_profile):
        for lp in fixture_profile.layer_profiles:
            assert 0 < lp.p999 <= lp.act_max

    def test_clipped_actmax_not_above_original(self, fixture_model, fixture_profile, calibration):
        clipped = set_thresholds(fixture_model, fixture_profile.act_max)
        clipped_prof = profile(clipped, calibration)
        for a, b in zip(clipped_prof.act_max, fixture_profile.act_max):
            assert a <= b

    def test_empty_calibration_rejected(self, fixture_model):
        with pytest.raises(ConfigError):
            profile(fixture_model, [])


class TestActivationHistogram:
    def test_clean_run_no_overflow(self, fixture_model, calibration):
        hist = activation_histogram(fixture_model, calibration[:16], layer=1)
        assert hist["overflow"] == 0
        assert sum(hist["counts"]) + hist["underflow"] == 16 * 4 * 24 * 24

    def test_faulty_run_produces_overflow(self, fixture_model, fixture_profile, calibration):
        # high fault rate in conv1 pushes activations past the clean maximum
        # in at least one of 50 trials (in practice nearly all)
        clean_hi = fixture_profile.act_max[0]
        hits = 0
        for trial in range(50):
            mask = draw_mask(fixture_model, FaultSpec(rate=1e-2, scope=0, seed=7, trial_id=trial))
            hist = activation_histogram(
                fixture_model, calibration[:8], layer=1, mask=mask, hi=clean_hi
            )
            if hist["overflow"] > 0:
                hits += 1
        assert hits >= 1

    def test_bad_layer_index(self, fixture_model, calibration):
        with pytest.raises(ConfigError):
            activation_histogram(fixture_model, calibration[:2], layer=99)


def test_profile_json_roundtrip(fixture_profile, tmp_path):
    path = tmp_path / "profile.json"
    save_profile(fixture_profile, path, provenance={"config_hash": "h", "seed": 0, "version": "v"})
    loaded = load_profile(path)
    assert loaded.act_max == fixture_profile.act_max
    assert loaded.sample_count == fixture_profile.sample_count
    for a, b in zip(loaded.layer_profiles, fixture_profile.layer_profiles):
        assert a == b
