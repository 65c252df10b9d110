import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from emgmex.errors import DomainError, ValidationError
from emgmex.sync import SyncAnchor, SyncConfig, counter_to_sample, frame_to_sample, load_anchors


class TestCounterToSample:
    def test_origin(self):
        assert counter_to_sample(0, SyncConfig()) == 0

    def test_arithmetic(self):
        assert counter_to_sample(10, SyncConfig(samples_per_packet=50, packets_per_tick=2)) == 1000
        assert counter_to_sample(7, SyncConfig(samples_per_packet=25, packets_per_tick=2)) == 350

    def test_negative_counter_rejected(self):
        with pytest.raises(DomainError):
            counter_to_sample(-1, SyncConfig())

    @given(st.integers(0, 10**6), st.integers(0, 10**6))
    def test_exactly_linear(self, a, b):
        cfg = SyncConfig(samples_per_packet=50, packets_per_tick=2)
        assert counter_to_sample(a + b, cfg) == counter_to_sample(a, cfg) + counter_to_sample(b, cfg)


class TestFrameToSample:
    def test_single_anchor_uses_nominal_slope(self):
        # 30 frames at 30 fps is one second, i.e. 1000 samples at 1 kHz.
        cfg = SyncConfig(video_fps=30.0)
        sample = frame_to_sample(30, [SyncAnchor(0, 0)], cfg, sample_rate_hz=1000.0)
        assert sample == 1000

    def test_two_anchor_midpoint(self):
        cfg = SyncConfig(samples_per_packet=50, packets_per_tick=2)
        anchors = [SyncAnchor(0, 0), SyncAnchor(300, 150)]
        assert frame_to_sample(150, anchors, cfg) == 7500

    def test_anchor_frame_maps_to_anchor_sample(self):
        cfg = SyncConfig(samples_per_packet=50, packets_per_tick=2)
        anchors = [SyncAnchor(10, 5), SyncAnchor(100, 50), SyncAnchor(400, 230)]
        for anchor in anchors:
            expected = counter_to_sample(anchor.counter_value, cfg)
            assert frame_to_sample(anchor.frame_index, anchors, cfg) == expected

    def test_extrapolates_from_nearest_segment(self):
        cfg = SyncConfig(samples_per_packet=50, packets_per_tick=2)
        anchors = [SyncAnchor(100, 50), SyncAnchor(200, 100)]
        # slope is 0.5 counters per frame on both sides
        assert frame_to_sample(0, anchors, cfg) == 0
        assert frame_to_sample(300, anchors, cfg) == 15000

    def test_empty_anchors_rejected(self):
        with pytest.raises(DomainError):
            frame_to_sample(0, [], SyncConfig())

    def test_non_monotone_anchors_rejected(self):
        anchors = [SyncAnchor(0, 10), SyncAnchor(50, 5)]
        with pytest.raises(DomainError, match="increasing"):
            frame_to_sample(10, anchors, SyncConfig())

    @given(st.lists(st.integers(0, 5000), min_size=2, max_size=40))
    def test_monotone_in_frame(self, frames):
        cfg = SyncConfig()
        anchors = [SyncAnchor(0, 0), SyncAnchor(500, 260), SyncAnchor(900, 480)]
        frames = sorted(frames)
        samples = [frame_to_sample(f, anchors, cfg) for f in frames]
        assert all(s1 <= s2 for s1, s2 in zip(samples, samples[1:]))


class TestConfigValidation:
    @pytest.mark.parametrize("kwargs", [
        {"samples_per_packet": 0},
        {"packets_per_tick": 0},
        {"video_fps": 0.0},
    ])
    def test_positive_fields(self, kwargs):
        with pytest.raises(ValidationError):
            SyncConfig(**kwargs)

    def test_negative_anchor_rejected(self):
        with pytest.raises(ValidationError):
            SyncAnchor(-1, 0)


def test_load_anchors(tmp_path):
    path = tmp_path / "anchors.json"
    path.write_text(json.dumps([
        {"frame_index": 0, "counter_value": 0},
        {"frame_index": 300, "counter_value": 150},
    ]))
    anchors = load_anchors(path)
    assert anchors == [SyncAnchor(0, 0), SyncAnchor(300, 150)]
