"""
Tests for the synthetic record generator
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from fishstream.core.exceptions import ConfigError
from fishstream.training import SyntheticParams, clean_oracle, concat_records, gen_synthetic, synth_record
from fishstream.training.synthetic import ar1_noise, phase_trace, record_rng


class TestSyntheticParams:
    """Test parameter validation"""

    def test_defaults_are_valid(self):
        params = SyntheticParams()
        assert params.length == 6000
        assert params.gap_samples(1.5) == 150

    def test_from_config(self, mock_config):
        mock_config.set("synthetic.length", 3000)
        mock_config.set("synthetic.p_index_range", [100, 500])
        mock_config.set("synthetic.max_gap_s", 5.0)
        params = SyntheticParams.from_config(mock_config)
        assert params.length == 3000
        assert params.p_index_range == (100, 500)

    @pytest.mark.parametrize(
        "overrides",
        [
            {"min_gap_s": 0.5},
            {"max_gap_s": 0.9, "min_gap_s": 1.0},
            {"noise_ar_coeff": 1.0},
            {"noise_fraction": 1.5},
            {"p_freq_hz": 0.0},
            {"p_duration_s": 1.5},
            {"length": 1000, "p_index_range": (500, 900)},
        ],
    )
    def test_invalid(self, overrides):
        with pytest.raises(ConfigError):
            SyntheticParams(**overrides)

    def test_magnitude_scaling(self):
        params = SyntheticParams()
        assert params.s_amplitude(4.0) / params.s_amplitude(2.0) == pytest.approx(10.0)
        assert params.coda_seconds(5.0) > params.coda_seconds(2.0)


class TestGenerator:
    """Test record generation"""

    def test_deterministic_per_seed(self, short_synthetic):
        a = gen_synthetic(short_synthetic, 3, seed=11)
        b = gen_synthetic(short_synthetic, 3, seed=11)
        for ra, rb in zip(a, b):
            np.testing.assert_array_equal(ra.samples, rb.samples)
            assert ra.p_index == rb.p_index

    def test_record_regenerates_alone(self, short_synthetic):
        batch = gen_synthetic(short_synthetic, 4, seed=5)
        rng = record_rng(5, 3)
        rng.random()  # the noise/quake draw
        alone = synth_record(short_synthetic, rng)
        np.testing.assert_array_equal(alone.samples, batch[3].samples)

    def test_labels_are_consistent(self, short_synthetic):
        for record in gen_synthetic(short_synthetic, 10, seed=2):
            lo, hi = short_synthetic.p_index_range
            assert lo <= record.p_index <= hi
            assert 100 <= record.s_index - record.p_index <= 400
            assert 2.0 <= record.magnitude <= 6.0
            expected = short_synthetic.ps_velocity_km_s * record.ps_gap_s
            assert record.distance_km == pytest.approx(expected, rel=1e-9)
            assert record.n_samples == 1200

    def test_noise_fraction(self, short_synthetic):
        all_noise = replace(short_synthetic, noise_fraction=1.0)
        records = gen_synthetic(all_noise, 5, seed=0)
        assert all(r.is_noise and r.p_index is None for r in records)

    def test_needs_records(self, short_synthetic):
        with pytest.raises(ConfigError):
            gen_synthetic(short_synthetic, 0, seed=0)

    def test_ar1_noise_level(self, rng):
        noise = ar1_noise(rng, 20000, 0.9, 2.0)
        assert noise.shape == (3, 20000)
        assert noise.std() == pytest.approx(2.0, rel=0.1)

    def test_phase_trace_duration(self):
        trace = phase_trace(200, 8.0, 0.3, 100.0, duration_s=0.8)
        assert trace[0] != 0.0
        assert np.all(trace[80:] == 0.0)


class TestCleanOracle:
    """Test closed-form label recovery on noise-free records"""

    def test_recovers_labels(self, short_synthetic):
        clean = replace(short_synthetic, noise_scale=0.0)
        for record in gen_synthetic(clean, 8, seed=21):
            labels = clean_oracle(record, clean)
            assert labels["p_index"] == record.p_index
            assert labels["s_index"] == record.s_index
            assert labels["distance_km"] == pytest.approx(record.distance_km, rel=1e-9)
            diff = abs(labels["back_azimuth_deg"] - record.back_azimuth_deg) % 360.0
            assert min(diff, 360.0 - diff) < 1e-2

    def test_silent_record(self, short_synthetic):
        clean = replace(short_synthetic, noise_scale=0.0)
        record = synth_record(clean, np.random.default_rng(0), noise_only=True)
        assert clean_oracle(record, clean) == {"p_index": None, "s_index": None}


class TestConcatRecords:
    """Test multi-quake streams"""

    def test_indices_shift_with_gaps(self, short_synthetic, rng):
        records = gen_synthetic(short_synthetic, 3, seed=4)
        stream = concat_records(records, gap_s=2.0, params=short_synthetic, rng=rng)
        assert stream.samples.shape == (3, 3 * 1200 + 2 * 200)
        assert stream.p_indices[0] == records[0].p_index
        assert stream.p_indices[1] == 1400 + records[1].p_index
        assert stream.s_indices[2] == 2 * 1400 + records[2].s_index
        np.testing.assert_array_equal(stream.samples[:, 1400:2600], records[1].samples)
        assert math.isclose(stream.sample_rate_hz, 100.0)
