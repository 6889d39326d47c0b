import io
import json
import logging
from dataclasses import replace

import numpy as np
import pytest

from pfintegrity import csvio
from pfintegrity.cli import cmd_metrics, cmd_run, cmd_sweep, main, parse_seeds, verify_manifest
from pfintegrity.config import dump_config, parse_config
from pfintegrity.errors import ConfigError
from pfintegrity.pipeline import EpochRecord
from pfintegrity.scenario import ScenarioConfig

SMALL = "[scenario]\nnum_epochs = 6\n[integrity]\nperturbations = 4\n"


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "scenario.ini"
    path.write_text(SMALL)
    return path


class TestConfig:
    def test_round_trip(self):
        cfg = replace(ScenarioConfig(), gnss_bias=150.5, fusion=False, alert_limits=(5.0, 10.0, 20.0))
        assert parse_config(dump_config(cfg)) == cfg

    def test_partial(self):
        cfg = parse_config("[gnss]\nnum_faults = 3\n")
        assert cfg.num_gnss_faults == 3 and cfg.num_particles == 120

    @pytest.mark.parametrize("text", [
        "[gnss]\nfaults = 3\n",
        "[gnss]\nnum_faults = three\n",
        "[filter]\nfusion = maybe\n",
        "not ini at all",
    ])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)


class TestSeeds:
    def test_range_inclusive(self):
        assert parse_seeds("0..3") == [0, 1, 2, 3]

    def test_duplicates_dropped_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger="pfintegrity"):
            assert parse_seeds("1,2,2,0..1") == [1, 2, 0]
        assert "duplicate" in caplog.text


class TestRun:
    def test_writes_outputs(self, config_file, tmp_path):
        out = tmp_path / "out"
        assert cmd_run(config_file, out) == 0
        rows = csvio.read_metrics(out / "metrics.csv")
        assert [float(r["alert_limit"]) for r in rows] == [8.0, 16.0]
        assert len(csvio.read_epochs(out / "epochs.csv")) == 6
        assert verify_manifest(out)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seeds"] == [0] and manifest["config"]["M"] == 4

    def test_manifest_detects_tampering(self, config_file, tmp_path):
        out = tmp_path / "out"
        cmd_run(config_file, out)
        with open(out / "epochs.csv", "a") as fh:
            fh.write("\n")
        assert not verify_manifest(out)

    def test_too_many_faults(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text(SMALL + "[gnss]\nnum_faults = 12\n")
        assert cmd_run(path, tmp_path / "out") == 2

    def test_missing_config(self, tmp_path):
        assert cmd_run(tmp_path / "nope.ini", tmp_path / "out") == 2

    def test_seed_override(self, config_file, tmp_path):
        assert cmd_run(config_file, tmp_path / "a", seed_override=5) == 0
        assert csvio.read_metrics(tmp_path / "a" / "metrics.csv")[0]["seed"] == "5"


class TestSweep:
    def test_single_cell(self, config_file, tmp_path):
        assert cmd_sweep(config_file, [100.0], [2], [0], tmp_path / "sw", workers=1) == 0
        rows = csvio.read_metrics(tmp_path / "sw" / "metrics.csv")
        assert len(rows) == 2 * 2
        assert {r["mode"] for r in rows} == {"fused", "gnss_only"}
        assert verify_manifest(tmp_path / "sw")

    def test_grid(self, config_file, tmp_path):
        assert cmd_sweep(config_file, [50.0, 100.0], [2, 4], [0, 1], tmp_path / "sw", workers=1) == 0
        rows = csvio.read_metrics(tmp_path / "sw" / "metrics.csv")
        cells = {(r["mode"], r["bias"], r["faults"], r["seed"]) for r in rows}
        assert len(cells) == 2 * 2 * 2 * 2
        agg = csvio.read_metrics(tmp_path / "sw" / "aggregate.csv")
        assert len(agg) == 2 * 2 * 2 * 2 and {r["n_seeds"] for r in agg} == {"2"}

    def test_invalid_fault_count(self, config_file, tmp_path):
        assert cmd_sweep(config_file, [100.0], [12], [0], tmp_path / "sw", workers=1) == 2

    def test_empty_lists(self, config_file, tmp_path):
        assert cmd_sweep(config_file, [], [2], [0], tmp_path / "sw", workers=1) == 2


class TestMetrics:
    def test_matches_run_metrics(self, config_file, tmp_path):
        out = tmp_path / "out"
        cmd_run(config_file, out)
        stored = csvio.read_metrics(out / "metrics.csv")
        for row in stored:
            buf = io.StringIO()
            assert cmd_metrics(out / "epochs.csv", float(row["alert_limit"]), stream=buf) == 0
            header, values = buf.getvalue().splitlines()
            got = dict(zip(header.split(","), values.split(",")))
            for key in got:
                assert got[key] == row[key]

    def test_threshold_one_means_no_alarms(self, config_file, tmp_path):
        out = tmp_path / "out"
        cmd_run(config_file, out)
        buf = io.StringIO()
        cmd_metrics(out / "epochs.csv", 8.0, threshold=1.0, stream=buf)
        got = dict(zip(*[line.split(",") for line in buf.getvalue().splitlines()]))
        assert float(got["p_fa"]) == 0.0

    def test_empty_file(self, tmp_path):
        path = tmp_path / "epochs.csv"
        path.write_text("")
        assert cmd_metrics(path, 8.0, stream=io.StringIO()) == 2

    def test_header_only(self, tmp_path):
        path = tmp_path / "epochs.csv"
        csvio.write_epochs(path, [], (8.0,))
        assert cmd_metrics(path, 8.0, stream=io.StringIO()) == 2

    def test_unknown_limit(self, config_file, tmp_path):
        cmd_run(config_file, tmp_path / "out")
        assert cmd_metrics(tmp_path / "out" / "epochs.csv", 3.0, stream=io.StringIO()) == 2


def test_epoch_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    recs = [EpochRecord(float(t), rng.normal(size=3), rng.normal(size=3),
                        {8.0: rng.random(), 16.0: rng.random()},
                        {8.0: rng.random(), 16.0: rng.random()}) for t in range(5)]
    path = tmp_path / "e.csv"
    csvio.write_epochs(path, recs, (8.0, 16.0))
    back = csvio.read_epochs(path)
    for a, b in zip(recs, back):
        np.testing.assert_allclose(b.estimate, a.estimate, rtol=1e-8)
        assert b.bounds[16.0] == pytest.approx(a.bounds[16.0], rel=1e-8)
        assert b.error == pytest.approx(a.error, rel=1e-8)


class TestMain:
    def test_default_config_parses(self, capsys):
        assert main(["default-config"]) == 0
        assert parse_config(capsys.readouterr().out) == ScenarioConfig()

    def test_bad_arguments(self):
        assert main(["run"]) == 2

    def test_bad_seed_list(self, config_file, tmp_path):
        assert main(["sweep", str(config_file), "--seeds", "a..b", "--out", str(tmp_path)]) == 2

    def test_run_subcommand(self, config_file, tmp_path):
        assert main(["run", str(config_file), "--out", str(tmp_path / "o")]) == 0
