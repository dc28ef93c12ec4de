"""
Tests for the memory bank, pick head and pick coordinates
"""

import json

import numpy as np
import pytest

from fishstream.core.exceptions import ShapeError
from fishstream.model import (
    IncrementalPickHead,
    MemoryBank,
    Phase,
    PickAggregator,
    PickEvent,
    StepOutput,
    aggregate_picks,
    decode_pick,
    encode_pick,
    encode_pick_targets,
    loc_head,
    mag_head,
    pick_head,
    pick_sequence,
)
from fishstream.tensor import Tensor


class TestMemoryBank:
    def test_starts_zero(self):
        bank = MemoryBank(4, 2)
        np.testing.assert_array_equal(bank.values(), np.zeros((4, 2)))
        assert bank.fill == 0

    def test_oldest_first(self):
        bank = MemoryBank(3, 1)
        for v in range(5):
            bank.push(np.array([float(v)]))
        np.testing.assert_array_equal(bank.values()[:, 0], [2.0, 3.0, 4.0])
        assert bank.newest()[0] == 4.0
        assert bank.fill == 3

    def test_partial_fill_keeps_zero_prefix(self):
        bank = MemoryBank(4, 1)
        bank.push(np.array([7.0]))
        np.testing.assert_array_equal(bank.values()[:, 0], [0.0, 0.0, 0.0, 7.0])

    def test_wrong_shape(self):
        with pytest.raises(ShapeError):
            MemoryBank(3, 2).push(np.zeros(3))

    def test_reset(self):
        bank = MemoryBank(3, 2)
        bank.push(np.ones(2))
        bank.reset()
        assert bank.fill == 0
        assert not bank.values().any()
        assert bank.state_size == 6


class TestPickHead:
    def test_bank_size(self, tiny_config):
        # 1 s at 25 Hz embedding rate, receptive field 2 * (3 - 1) + 1
        assert tiny_config.bank_size == 25
        assert tiny_config.pick_receptive_field == 5

    def test_outputs_in_unit_interval(self, tiny_network, rng):
        bank = rng.normal(size=(25, 8)).astype(np.float32)
        p, s = pick_head(bank, tiny_network.cfg, tiny_network.params)
        assert 0.0 < p < 1.0 and 0.0 < s < 1.0

    def test_short_bank(self, tiny_network):
        with pytest.raises(ShapeError):
            pick_head(np.zeros((3, 8)), tiny_network.cfg, tiny_network.params)

    def test_incremental_matches_direct(self, tiny_network, rng):
        cfg = tiny_network.cfg
        arrays = tiny_network.params.arrays()
        bank = MemoryBank(cfg.bank_size, 8, np.float32)
        head = IncrementalPickHead(cfg, arrays, np.float32)
        for e in rng.normal(size=(70, 8)).astype(np.float32):
            bank.push(e)
            incremental = head.push(e)
            np.testing.assert_allclose(incremental, pick_head(bank, cfg, arrays), rtol=1e-6, atol=1e-7)

    def test_incremental_reset(self, tiny_network, rng):
        cfg = tiny_network.cfg
        arrays = tiny_network.params.arrays()
        head = IncrementalPickHead(cfg, arrays, np.float32)
        size = head.state_size
        rows = rng.normal(size=(10, 8)).astype(np.float32)
        first = [head.push(e) for e in rows]
        head.reset()
        assert [head.push(e) for e in rows] == first
        assert head.state_size == size

    def test_sequence_matches_bank_per_step(self, tiny_network, rng):
        """Row t of the training path equals the head over the bank at t"""
        cfg = tiny_network.cfg
        e = rng.normal(size=(40, 8)).astype(np.float32)
        seq = pick_sequence(Tensor(e), cfg, tiny_network.params).data
        assert seq.shape == (40, 2)
        for t in range(40):
            bank = np.zeros((cfg.bank_size, 8), dtype=np.float32)
            rows = e[max(0, t - cfg.bank_size + 1) : t + 1]
            bank[cfg.bank_size - len(rows) :] = rows
            np.testing.assert_allclose(seq[t], pick_head(bank, cfg, tiny_network.params), rtol=1e-5, atol=1e-6)

    def test_fresh_head_leans_absent(self, tiny_network):
        """The output bias starts the head near 'no arrival'"""
        bias = tiny_network.params["decoder.pick.out.bias"].data
        np.testing.assert_allclose(1.0 / (1.0 + np.exp(-bias)), 0.99, atol=1e-3)


class TestPickCoordinates:
    @pytest.mark.parametrize("seed", range(20))
    def test_decode_inverts_encode(self, seed):
        rng = np.random.default_rng(seed)
        bank, factor = 750, 4
        step = int(rng.integers(0, 5000))
        lo, hi = max((step - bank + 1) * factor, 0), (step + 1) * factor - 1
        index = int(rng.integers(lo, hi + 1))
        rel = encode_pick(index, step, bank, factor)
        assert 0.0 <= rel < 1.0
        assert decode_pick(rel, (step + 1) * factor, bank, factor, absent_threshold=1.0) == index

    def test_outside_bank_is_absent(self):
        assert encode_pick(None, 10, 750, 4) == 1.0
        assert encode_pick(45, 10, 750, 4) == 1.0  # after the newest sample
        assert encode_pick(0, 1000, 750, 4) == 1.0  # already evicted

    def test_newest_and_oldest_positions(self):
        assert encode_pick(40, 10, 750, 4) == pytest.approx(749 / 750)
        assert encode_pick(0, 749, 750, 4) == 0.0

    def test_decode_threshold(self):
        assert decode_pick(0.995, 4000, 750, 4) is None
        assert decode_pick(0.5, 4000, 750, 4) == 4000 - 1500

    def test_newest_rows_decode_absent(self):
        step, bank, factor = 1000, 750, 4
        recent = encode_pick((step - 6) * factor, step, bank, factor)
        older = encode_pick((step - 8) * factor, step, bank, factor)
        assert decode_pick(recent, (step + 1) * factor, bank, factor) is None
        assert decode_pick(older, (step + 1) * factor, bank, factor) == (step - 8) * factor

    def test_vectorized_targets(self):
        targets = encode_pick_targets(123, 60, 25, 4)
        np.testing.assert_allclose(targets, [encode_pick(123, t, 25, 4) for t in range(60)])
        np.testing.assert_array_equal(encode_pick_targets(None, 5, 25, 4), np.ones(5))


class TestPickAggregation:
    def test_cluster_median(self):
        agg = PickAggregator(merge_window=100)
        assert agg.add(Phase.P, 1000) is None
        assert agg.add(Phase.P, 1010) is None
        assert agg.add(Phase.P, 1004) is None
        closed = agg.add(Phase.P, 3000)
        assert closed == PickEvent(Phase.P, 1004)
        assert agg.finish() == [PickEvent(Phase.P, 3000)]

    def test_phases_independent(self):
        agg = PickAggregator(merge_window=10)
        agg.add(Phase.P, 100)
        agg.add(Phase.S, 400)
        agg.add(Phase.P, 103)
        assert agg.finish() == [PickEvent(Phase.P, 102), PickEvent(Phase.S, 400)]

    def test_chain_joins_by_last_member(self):
        """Slow drift stays one cluster as long as consecutive gaps are small"""
        events = aggregate_picks([(Phase.S, 100 + 50 * i) for i in range(6)], merge_window=60)
        assert events == [PickEvent(Phase.S, 225)]

    def test_event_dict(self):
        assert PickEvent(Phase.S, 12).to_dict() == {"phase": "S", "sample_index": 12}


class TestStepOutput:
    def test_json_format(self):
        out = StepOutput(t=400, p_rel=0.25, s_rel=1.0, magnitude=3.5, x_km=-2.0, y_km=0.125)
        line = out.to_json()
        assert line == '{"t": 400, "p": 0.250000, "s": 1.000000, "mag": 3.500000, "x_km": -2.000000, "y_km": 0.125000}'
        assert json.loads(line)["mag"] == 3.5

    def test_derived_location(self):
        out = StepOutput(t=0, p_rel=1.0, s_rel=1.0, magnitude=0.0, x_km=3.0, y_km=4.0)
        assert out.distance_km == pytest.approx(5.0)
        east = StepOutput(t=0, p_rel=1.0, s_rel=1.0, magnitude=0.0, x_km=1.0, y_km=0.0)
        assert east.back_azimuth_deg == pytest.approx(90.0)
        west = StepOutput(t=0, p_rel=1.0, s_rel=1.0, magnitude=0.0, x_km=-1.0, y_km=0.0)
        assert west.back_azimuth_deg == pytest.approx(270.0)


class TestRegressionHeads:
    def test_numpy_and_tensor_agree(self, tiny_network, rng):
        e = rng.normal(size=(6, 8)).astype(np.float32)
        loc = loc_head(Tensor(e), tiny_network.params).data
        mag = mag_head(Tensor(e), tiny_network.params).data
        arrays = tiny_network.params.arrays()
        for i in range(6):
            np.testing.assert_allclose(loc_head(e[i], arrays), loc[i], rtol=1e-5, atol=1e-6)
            assert mag_head(e[i], arrays) == pytest.approx(float(mag[i, 0]), rel=1e-5, abs=1e-6)
