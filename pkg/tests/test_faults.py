"""Fault injector: mask draws, statistics, involution, IEEE phenomenology."""

import numpy as np
import pytest

from faultclip.errors import ConfigError, MaskIndexError
from faultclip.faults import (
    FaultMask,
    FaultSpec,
    apply_mask,
    draw_mask,
    read_mask_jsonl,
    write_mask_jsonl,
)
from faultclip.model import forward, param_checksum
from faultclip.ops import relu

from util import build_fc_model


@pytest.fixture(scope="module")
def big_model():
    # 250x125 weight = 31250 words = exactly 1e6 bits with biases excluded
    rng = np.random.default_rng(0)
    w = rng.normal(0, 0.1, (250, 125)).astype(np.float32)
    b = np.zeros(250, dtype=np.float32)
    return build_fc_model([w], [b])


class TestDrawMask:
    def test_rate_zero_empty(self, big_model):
        assert len(draw_mask(big_model, FaultSpec(rate=0.0))) == 0

    def test_rate_one_every_bit_once(self, big_model):
        mask = draw_mask(big_model, FaultSpec(rate=1.0))
        assert len(mask) == big_model.total_bits()
        assert len(set(mask.flips)) == len(mask)

    def test_binomial_count_within_4_sigma(self, big_model):
        spec = FaultSpec(rate=1e-3, seed=11, trial_id=0, include_biases=False)
        n = len(draw_mask(big_model, spec))
        sigma = np.sqrt(1e6 * 1e-3 * (1 - 1e-3))
        assert abs(n - 1000) <= 4 * sigma

    def test_deterministic_per_spec(self, big_model):
        spec = FaultSpec(rate=1e-3, seed=42, trial_id=5)
        assert draw_mask(big_model, spec) == draw_mask(big_model, spec)

    def test_trials_differ(self, big_model):
        a = draw_mask(big_model, FaultSpec(rate=1e-3, seed=42, trial_id=0))
        b = draw_mask(big_model, FaultSpec(rate=1e-3, seed=42, trial_id=1))
        assert a != b

    def test_exclude_biases(self, big_model):
        mask = draw_mask(big_model, FaultSpec(rate=1.0, include_biases=False))
        assert all(param == "weight" for _, param, _, _ in mask.flips)
        assert len(mask) == 31250 * 32

    def test_layer_scope_restricted(self, fixture_model):
        mask = draw_mask(fixture_model, FaultSpec(rate=1e-2, scope=0, seed=1))
        assert {layer for layer, _, _, _ in mask.flips} == {0}

    def test_layer_scope_matches_network_draw(self, fixture_model):
        # streams are keyed per (layer, param): restricting the scope does
        # not change what a layer receives
        net = draw_mask(fixture_model, FaultSpec(rate=1e-2, scope="network", seed=3))
        lay = draw_mask(fixture_model, FaultSpec(rate=1e-2, scope=0, seed=3))
        assert lay.flips == tuple(f for f in net.flips if f[0] == 0)

    def test_invalid_scope_layer(self, fixture_model):
        with pytest.raises(ConfigError, match="no parameters"):
            draw_mask(fixture_model, FaultSpec(rate=0.1, scope=1))

    def test_invalid_rate(self):
        with pytest.raises(ConfigError):
            FaultSpec(rate=1.5)


class TestApplyMask:
    def test_empty_mask_identity(self, fixture_model, evaluation):
        from faultclip.data import batch_images

        x = batch_images(evaluation[:8])
        out_a = forward(fixture_model, x)
        out_b = forward(apply_mask(fixture_model, FaultMask()), x)
        assert np.array_equal(out_a, out_b)

    def test_sign_bit_flip(self):
        m = build_fc_model([np.array([[1.0]], dtype=np.float32)], [np.zeros(1, np.float32)])
        faulty = apply_mask(m, FaultMask(((0, "weight", 0, 31),)))
        assert faulty.params[0]["weight"].words[0] == 0xBF800000  # -1.0: magnitude kept

    def test_top_exponent_flip_makes_inf(self):
        # 1.0 = 0x3F800000; flipping bit 30 gives 0x7F800000 = +Inf, and the
        # next activation saturates: the high-intensity phenomenon
        m = build_fc_model([np.array([[1.0]], dtype=np.float32)], [np.zeros(1, np.float32)])
        faulty = apply_mask(m, FaultMask(((0, "weight", 0, 30),)))
        assert faulty.params[0]["weight"].words[0] == 0x7F800000
        out = forward(faulty, np.ones(1, dtype=np.float32))
        assert np.isposinf(out[0])
        assert np.isposinf(relu(out)[0])

    def test_involution(self, big_model):
        mask = draw_mask(big_model, FaultSpec(rate=1e-3, seed=5))
        twice = apply_mask(apply_mask(big_model, mask), mask)
        assert np.array_equal(big_model.params[0]["weight"].words, twice.params[0]["weight"].words)
        assert param_checksum(twice) == param_checksum(big_model)

    def test_original_untouched(self, big_model):
        before = big_model.params[0]["weight"].words.copy()
        mask = draw_mask(big_model, FaultSpec(rate=0.5, seed=6))
        apply_mask(big_model, mask)
        assert np.array_equal(big_model.params[0]["weight"].words, before)

    def test_scope_isolation(self, fixture_model):
        mask = draw_mask(fixture_model, FaultSpec(rate=1e-2, scope=0, seed=2))
        faulty = apply_mask(fixture_model, mask)
        for li in fixture_model.param_layer_indices:
            if li == 0:
                continue
            for name in ("weight", "bias"):
                assert faulty.params[li][name].words is fixture_model.params[li][name].words

    def test_out_of_range_word(self, big_model):
        with pytest.raises(MaskIndexError, match="out of range"):
            apply_mask(big_model, FaultMask(((0, "weight", 10**9, 0),)))

    def test_missing_target(self, big_model):
        with pytest.raises(MaskIndexError):
            apply_mask(big_model, FaultMask(((5, "weight", 0, 0),)))

    def test_duplicate_flips_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            FaultMask(((0, "weight", 0, 3), (0, "weight", 0, 3)))

    def test_bad_bit_index_rejected(self):
        with pytest.raises(MaskIndexError):
            FaultMask(((0, "weight", 0, 32),))


class TestMaskSerialization:
    def test_jsonl_roundtrip(self, big_model, tmp_path):
        mask = draw_mask(big_model, FaultSpec(rate=1e-4, seed=8))
        path = tmp_path / "mask.jsonl"
        write_mask_jsonl(mask, path, provenance={"seed": 8, "version": "x", "config_hash": "y"})
        assert read_mask_jsonl(path) == mask

    def test_empty_mask_file_has_only_provenance(self, big_model, tmp_path):
        path = tmp_path / "mask.jsonl"
        write_mask_jsonl(FaultMask(), path, provenance={"seed": 0})
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 1 and "provenance" in lines[0]
        assert len(read_mask_jsonl(path)) == 0


def test_corrupted_inference_is_reproducible(fixture_model, evaluation):
    from faultclip.data import batch_images

    spec = FaultSpec(rate=1e-3, scope="network", seed=33, trial_id=2)
    x = batch_images(evaluation[:16])
    a = forward(fixture_model, x, mask=draw_mask(fixture_model, spec))
    b = forward(fixture_model, x, mask=draw_mask(fixture_model, spec))
    assert np.array_equal(a, b)
