"""
Tests for the evaluation protocol
"""

import csv
import json

import numpy as np
import pytest

from fishstream.core.exceptions import ConfigError, EvaluationError
from fishstream.evaluation import EvalConfig, Evaluator, RecordOutcome, output_at, picks_from_outputs
from fishstream.model import FishNetwork, Phase, PickEvent, StepOutput
from fishstream.storage import WaveformRecord


def _flat_outputs(n: int) -> list[StepOutput]:
    """Constant estimates: magnitude 3.5 at (3, 0) km, no picks"""
    return [StepOutput(4 * (i + 1), 1.0, 1.0, 3.5, 3.0, 0.0) for i in range(n)]


@pytest.fixture
def labelled_outcome():
    record = WaveformRecord(np.zeros((3, 2400)), p_index=100, s_index=300, magnitude=3.0, x_km=3.0, y_km=4.0)
    events = [PickEvent(Phase.P, 102), PickEvent(Phase.S, 310)]
    return RecordOutcome(record, _flat_outputs(600), events)


@pytest.fixture
def eval_cfg():
    return EvalConfig(report_seconds_after_p=5.0, p_window=(-1, 10), s_window=(0, 2), bootstrap=50)


class TestEvalConfig:
    """Test evaluation configuration"""

    def test_from_config(self, mock_config):
        mock_config.set("eval.tolerance_seconds", 0.25)
        mock_config.set("stream.report_seconds_after_p", 10.0)
        cfg = EvalConfig.from_config(mock_config)
        assert cfg.tolerance_seconds == 0.25
        assert cfg.report_seconds_after_p == 10.0
        assert isinstance(cfg.p_window, tuple)

    def test_invalid(self):
        with pytest.raises(ConfigError):
            EvalConfig(tolerance_seconds=0)
        with pytest.raises(ConfigError):
            EvalConfig(p_window=(5, 1))


class TestHelpers:
    """Test output lookup and pick decoding"""

    def test_output_at(self):
        outputs = _flat_outputs(10)
        assert output_at(outputs, 3, 4) is None
        assert output_at(outputs, 4, 4).t == 4
        assert output_at(outputs, 11.5, 4).t == 8
        assert output_at(outputs, 1000, 4) is None

    def test_picks_from_outputs_clusters(self):
        # rel 0.5 at bank 25, F 4: index = t - 50
        outputs = [StepOutput(t, 0.5, 1.0, 0.0, 0.0, 0.0) for t in range(60, 80, 4)]
        events = picks_from_outputs(outputs, 25, 4, 0.99, merge_window=100)
        assert events == [PickEvent(Phase.P, 18)]


class TestReport:
    """Test scoring of collected outcomes"""

    def test_report_values(self, tiny_network, labelled_outcome, eval_cfg):
        report = Evaluator(tiny_network, eval_cfg).report([labelled_outcome])

        assert report.n_records == 1
        assert report.p_picks.f1 == 1.0
        assert report.s_picks.f1 == 1.0
        assert report.offline_p.recall == 0.0
        at = report.at_report
        assert at["mag_mae"] == pytest.approx(0.5)
        assert at["loc_err_median_km"] == pytest.approx(4.0)
        assert at["distance_err_mean_km"] == pytest.approx(2.0)
        assert at["back_azimuth_err_median_deg"] == pytest.approx(90.0 - np.degrees(np.arctan2(3.0, 4.0)))
        assert at["loc_err_relative_median"] == pytest.approx(0.8)
        assert report.powerlaw is None

    def test_curves_cover_available_offsets(self, tiny_network, labelled_outcome, eval_cfg):
        report = Evaluator(tiny_network, eval_cfg).report([labelled_outcome])
        assert report.p_curve.offsets == list(range(0, 11))
        assert report.s_curve.offsets == [0, 1, 2]
        assert report.p_curve.at(5) == (pytest.approx(0.5), pytest.approx(4.0))
        assert report.drop_fraction == {"mag": 0.0, "loc": 0.0}

    def test_powerlaw_with_three_records(self, tiny_network, eval_cfg):
        outcomes = []
        for gap in (100, 200, 400):
            record = WaveformRecord(np.zeros((3, 2400)), p_index=100, s_index=100 + gap, magnitude=3.0, x_km=3.0, y_km=4.0)
            outcomes.append(RecordOutcome(record, _flat_outputs(600), []))
        report = Evaluator(tiny_network, eval_cfg).report(outcomes)
        assert report.powerlaw is not None
        assert report.powerlaw.n_points == 3
        assert report.powerlaw.slope == pytest.approx(0.0, abs=1e-9)

    def test_noise_records_only_count_false_picks(self, tiny_network, eval_cfg):
        record = WaveformRecord(np.zeros((3, 400)), is_noise=True)
        outcome = RecordOutcome(record, _flat_outputs(100), [PickEvent(Phase.P, 50)])
        report = Evaluator(tiny_network, eval_cfg).report([outcome])
        assert report.p_picks.n_pred == 1
        assert report.p_picks.true_positives == 0
        assert report.at_report == {"n": 0.0}

    def test_empty(self, tiny_network):
        with pytest.raises(EvaluationError):
            Evaluator(tiny_network).report([])

    def test_json_and_csv(self, tiny_network, labelled_outcome, eval_cfg, tmp_path):
        report = Evaluator(tiny_network, eval_cfg).report([labelled_outcome])
        payload = json.loads(report.to_json())
        assert set(payload["picks"]) == {"P", "S"}
        assert "offline_picks" in payload

        path = tmp_path / "curves.csv"
        report.write_curves_csv(path)
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["align", "offset_s", "mag_mae", "loc_err_km", "count"]
        assert len(rows) == 1 + 11 + 3
        assert rows[1] == ["P", "0", "0.500000", "4.000000", "1"]


class TestCollect:
    """Test parallel and online collection"""

    @pytest.fixture
    def records(self, rng):
        return [
            WaveformRecord(rng.normal(size=(3, 200)), p_index=60, s_index=150, magnitude=2.0, x_km=1.0, y_km=1.0),
            WaveformRecord(rng.normal(size=(3, 160)), is_noise=True),
        ]

    def test_modes_agree(self, tiny_network, records):
        evaluator = Evaluator(tiny_network)
        parallel = evaluator.collect(records, "parallel")
        online = evaluator.collect(records, "online")
        for a, b in zip(parallel, online):
            assert [o.t for o in a.outputs] == [o.t for o in b.outputs]
            np.testing.assert_allclose(
                [o.magnitude for o in a.outputs], [o.magnitude for o in b.outputs], rtol=1e-3, atol=5e-4
            )

    def test_modes_agree_on_events(self, tiny_config, records):
        network = FishNetwork(tiny_config, seed=7)
        network.params["decoder.pick.out.bias"].data[...] = -50.0
        evaluator = Evaluator(network)
        parallel = evaluator.collect(records, "parallel")
        online = evaluator.collect(records, "online")
        assert [o.events for o in parallel] == [o.events for o in online]
        assert all(o.events for o in parallel)

    def test_unknown_mode(self, tiny_network, records):
        with pytest.raises(EvaluationError):
            Evaluator(tiny_network).collect(records, "batch")

    def test_evaluate(self, tiny_network, records, mock_logger):
        report = Evaluator(tiny_network, logger=mock_logger).evaluate(records, mode="online")
        assert report.mode == "online"
        assert report.n_records == 2
        assert report.p_picks.n_true == 1
