"""Integration tests: full protocol runs at realistic sizes, config through CSV."""

import numpy as np
import pytest

from rfid_missing_tags.__main__ import main
from rfid_missing_tags.analysis import ARRANGEMENT_MS_PER_TAG, ssmti_predicted_time
from rfid_missing_tags.config import ExperimentConfig
from rfid_missing_tags.core import make_inventory
from rfid_missing_tags.experiment import run_experiment, sweep
from rfid_missing_tags.exporter import report_csv
from rfid_missing_tags.ssmti import run_arrangement


def _report(protocol, q, trials=10, **kwargs):
    config = ExperimentConfig(protocol=protocol, n=10_000, missing_rate=q, trials=trials, **kwargs)
    return run_experiment(config)


class TestHeadlineTimes:
    def test_ssmti_near_one_second(self):
        report = _report("ssmti", 0.1)
        assert 880 <= report.mean_ms <= 1000
        assert report.accuracy == 1.0
        # ceil overheads put the simulation slightly above the closed form
        assert report.mean_ms >= ssmti_predicted_time(10_000) * 0.98

    def test_arrangement_cost_per_tag(self):
        costs = [
            run_arrangement(make_inventory(10_000, 0.1, seed).candidates, rng=seed).elapsed_ms / 10_000
            for seed in range(3)
        ]
        assert 0.95 * ARRANGEMENT_MS_PER_TAG <= np.mean(costs) <= 1.05 * ARRANGEMENT_MS_PER_TAG

    def test_ismti_low_missing_rate(self):
        report = _report("ismti", 0.1)
        assert 1300 <= report.mean_ms <= 1700
        assert report.accuracy == 1.0

    def test_ismti_wins_when_most_tags_are_missing(self):
        ismti = _report("ismti", 0.9, trials=5)
        ssmti = _report("ssmti", 0.9, trials=5)
        assert ismti.mean_ms < 750
        assert ismti.mean_ms < ssmti.mean_ms

    def test_ismti_gets_faster_with_more_missing(self):
        times = [_report("ismti", q, trials=3).mean_ms for q in (0.1, 0.5, 0.9)]
        assert times[0] > times[1] > times[2]

    def test_ssmti_flat_across_missing_rate(self):
        times = [_report("ssmti", q, trials=3).mean_ms for q in (0.1, 0.5, 0.9)]
        assert max(times) <= 1.03 * min(times)

    def test_ismti_given_rate_when_most_tags_are_missing(self):
        report = _report("ismti", 0.9, trials=5, missing_rate_oracle=True)
        assert 423 <= report.mean_ms <= 517
        assert report.accuracy == 1.0

    def test_edfsa_far_behind(self):
        edfsa = _report("edfsa", 0.1, trials=2)
        assert edfsa.mean_ms > 20_000


class TestStringLength:
    def test_full_length_strings_are_fastest(self):
        reports = sweep(ExperimentConfig(n=2000, w=(8, 16, 32, 64, 96), trials=3))
        times = {r.config.w: r.mean_ms for r in reports}
        assert min(times, key=times.get) == 96
        assert times[8] > times[32] > times[96]


class TestChannelErrors:
    @pytest.mark.parametrize("protocol", ["ssmti", "ismti"])
    def test_more_present_tags_more_mistakes(self, protocol):
        common = dict(protocol=protocol, n=2000, detect_err=0.02, trials=3)
        low = run_experiment(ExperimentConfig(missing_rate=0.1, **common))
        high = run_experiment(ExperimentConfig(missing_rate=0.9, **common))
        assert low.accuracy < 1.0
        assert low.accuracy < high.accuracy
        assert low.false_positives > high.false_positives

    @pytest.mark.parametrize("protocol", ["ssmti", "ismti"])
    def test_capture_hides_missing_tags(self, protocol):
        common = dict(protocol=protocol, n=2000, capture=0.2, trials=3)
        low = run_experiment(ExperimentConfig(missing_rate=0.1, **common))
        high = run_experiment(ExperimentConfig(missing_rate=0.9, **common))
        assert low.accuracy < 1.0
        assert low.accuracy < high.accuracy
        assert low.false_negatives == high.false_negatives == 0

    def test_missing_tags_never_reported_present(self):
        report = run_experiment(ExperimentConfig(n=2000, missing_rate=0.3, detect_err=0.05, trials=3))
        assert report.false_negatives == 0


class TestSweepToCsv:
    def test_deterministic_output(self):
        config = ExperimentConfig(protocol="ismti", n=300, missing_rate=(0.2, 0.6), trials=3, master_seed=9)
        assert report_csv(sweep(config)) == report_csv(sweep(config))

    def test_cli_end_to_end(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        main(["sweep", "--protocol", "ssmti", "--n", "200,400", "-q", "0.25",
              "--trials", "2", "--seed", "4", "--output", str(out)])
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0].startswith("protocol,n,q,w,p")
        assert [line.split(",")[1] for line in lines[1:]] == ["200", "400"]
        assert all(line.endswith(",1.000000") for line in lines[1:])
        assert "[export] Created: sweep.csv (2 rows)" in capsys.readouterr().out

    def test_parallel_trials_match(self):
        config = ExperimentConfig(protocol="ismti", n=500, missing_rate=0.4, trials=4, master_seed=2)
        serial = run_experiment(config)
        pooled = run_experiment(ExperimentConfig(**{**config.__dict__, "workers": 2}))
        assert pooled.mean_ms == serial.mean_ms
        assert pooled.mean_reader_bits == serial.mean_reader_bits
