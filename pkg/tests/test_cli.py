import json
import subprocess
import sys

import numpy as np
import pytest

from tracesim.cli import main
from tracesim.distance import read_matrix_binary
from synthetic import drift_rows, small_rows, write_csv


def run_cli(*args):
    return main(list(args))


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    csv_path = write_csv(drift_rows(accounts_per_class=6, tweets_per_account=12, seed=5),
                         root / "drift.csv")
    out = root / "corpus"
    assert run_cli("ingest", "--input", str(csv_path), "--min-count", "3",
                   "--out", str(out)) == 0
    return out


class TestIngestCommand:
    def test_artifacts_written(self, corpus_dir):
        for name in ("items.tsv", "vocab.tsv", "cooccur.bin", "cooccur.bin.sha256",
                     "manifest.json"):
            assert (corpus_dir / name).exists(), name
        manifest = json.loads((corpus_dir / "manifest.json").read_text())
        assert manifest["item_count"] > 0
        assert manifest["vocab_size"] > 0
        assert set(manifest["artifacts"]) == {"items.tsv", "vocab.tsv", "cooccur.bin"}

    def test_missing_column_exit_2(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("author,content\nx,y\n")
        assert run_cli("ingest", "--input", str(bad), "--out", str(tmp_path / "o")) == 2

    def test_empty_file_exit_2(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        assert run_cli("ingest", "--input", str(empty), "--out", str(tmp_path / "o")) == 2

    def test_missing_file_exit_2(self, tmp_path):
        assert run_cli("ingest", "--input", str(tmp_path / "nope.csv"),
                       "--out", str(tmp_path / "o")) == 2


class TestEvaluateCommand:
    def test_reports_written(self, corpus_dir, tmp_path):
        out = tmp_path / "eval"
        assert run_cli("evaluate", "--corpus", str(corpus_dir),
                       "--metric", "SED,t-SED,LR",
                       "--sample", "12", "--seed", "1",
                       "--k-grid", "1,3", "--theta-grid", "0,0.1",
                       "--out", str(out)) == 0
        for slug in ("sed", "t-sed", "lr"):
            assert (out / slug / "report.json").exists(), slug
            assert (out / slug / "predictions.csv").exists(), slug
        assert (out / "sed" / "grid.csv").exists()
        assert not (out / "lr" / "grid.csv").exists()
        report = json.loads((out / "t-sed" / "report.json").read_text())
        assert report["metric"] == "t-SED"
        assert 0.0 <= report["selection_by_macro"]["test"]["macro_f1"] <= 1.0

    def test_unknown_metric_exit_2(self, corpus_dir, tmp_path):
        assert run_cli("evaluate", "--corpus", str(corpus_dir),
                       "--metric", "Mystery", "--out", str(tmp_path / "e")) == 2

    def test_stale_artifact_exit_2(self, corpus_dir, tmp_path):
        import shutil
        stale = tmp_path / "stale"
        shutil.copytree(corpus_dir, stale)
        with open(stale / "items.tsv", "a") as fh:
            fh.write("999\thacker\t0\tLeftTroll\t\n")
        assert run_cli("evaluate", "--corpus", str(stale),
                       "--metric", "ED", "--out", str(tmp_path / "e")) == 2

    def test_byte_identical_reruns(self, corpus_dir, tmp_path):
        args = ("evaluate", "--corpus", str(corpus_dir), "--metric", "t-ED,LR",
                "--sample", "10", "--seed", "3", "--k-grid", "1,3",
                "--theta-grid", "0,0.05")
        out1, out2 = tmp_path / "run1", tmp_path / "run2"
        assert run_cli(*args, "--out", str(out1)) == 0
        assert run_cli(*args, "--out", str(out2)) == 0
        for slug in ("t-ed", "lr"):
            for name in ("report.json", "predictions.csv"):
                assert (out1 / slug / name).read_bytes() == \
                    (out2 / slug / name).read_bytes(), (slug, name)

    def test_saved_config_reexecutes_identically(self, corpus_dir, tmp_path):
        out1 = tmp_path / "flags"
        assert run_cli("evaluate", "--corpus", str(corpus_dir), "--metric", "SED",
                       "--sample", "8", "--seed", "2", "--k-grid", "1,3",
                       "--out", str(out1)) == 0
        saved = json.loads((out1 / "run_config.json").read_text())
        assert saved["metric"] == "SED"
        assert saved["sample"] == 8
        out2 = tmp_path / "fromconfig"
        assert run_cli("evaluate", "--config", str(out1 / "run_config.json"),
                       "--out", str(out2)) == 0
        assert (out1 / "sed" / "report.json").read_bytes() == \
            (out2 / "sed" / "report.json").read_bytes()

    def test_bad_config_file_exit_2(self, corpus_dir, tmp_path):
        bad = tmp_path / "cfg.json"
        bad.write_text("[1, 2]")
        assert run_cli("evaluate", "--config", str(bad),
                       "--out", str(tmp_path / "e")) == 2

    def test_worker_count_does_not_change_reports(self, corpus_dir, tmp_path):
        common = ("--corpus", str(corpus_dir), "--metric", "SED", "--sample", "8",
                  "--seed", "6", "--k-grid", "1,3", "--theta-grid", "0,0.1")
        out1, out2 = tmp_path / "w1", tmp_path / "w2"
        assert run_cli("evaluate", *common, "--workers", "1", "--out", str(out1)) == 0
        assert run_cli("evaluate", *common, "--workers", "3", "--out", str(out2)) == 0
        assert (out1 / "sed" / "report.json").read_bytes() == \
            (out2 / "sed" / "report.json").read_bytes()
        assert (out1 / "sed" / "grid.csv").read_bytes() == \
            (out2 / "sed" / "grid.csv").read_bytes()

    def test_predictions_csv_shape(self, corpus_dir, tmp_path):
        out = tmp_path / "preds"
        assert run_cli("evaluate", "--corpus", str(corpus_dir), "--metric", "t-SED",
                       "--sample", "8", "--seed", "1", "--k-grid", "1",
                       "--theta-grid", "0.1", "--out", str(out)) == 0
        import csv as csv_mod
        with open(out / "t-sed" / "predictions.csv", newline="") as fh:
            rows = list(csv_mod.DictReader(fh))
        assert rows, "no prediction rows"
        labels = {"LeftTroll", "RightTroll", "NewsFeed"}
        for row in rows:
            assert row["metric"] == "t-SED"
            assert row["k"] == "1"
            assert float(row["theta"]) == 0.1
            assert row["true_label"] in labels
            assert row["predicted_label"] in labels
            assert row["item_id"].isdigit()

    def test_plain_metric_with_explicit_thetas_runs_time_sensitively(
            self, corpus_dir, tmp_path):
        # an explicit theta grid applies the decay to any base metric,
        # so ED with thetas gives the same surface as t-ED
        common = ("--corpus", str(corpus_dir), "--sample", "8", "--seed", "4",
                  "--k-grid", "1,3", "--theta-grid", "0,0.1")
        out_ed, out_ted = tmp_path / "ed", tmp_path / "ted"
        assert run_cli("evaluate", "--metric", "ED", *common, "--out", str(out_ed)) == 0
        assert run_cli("evaluate", "--metric", "t-ED", *common, "--out", str(out_ted)) == 0
        assert (out_ed / "ed" / "grid.csv").read_bytes() == \
            (out_ted / "t-ed" / "grid.csv").read_bytes()


class TestExportCommand:
    def test_matrix_and_sidecar(self, corpus_dir, tmp_path):
        out = tmp_path / "exp"
        assert run_cli("export", "--corpus", str(corpus_dir), "--metric", "SED",
                       "--window", "2016-03", "--out", str(out)) == 0
        sidecar = (out / "sidecar.tsv").read_text().splitlines()
        n = len(sidecar) - 1
        assert n > 0
        matrix = read_matrix_binary(out / "matrix.bin")
        assert matrix.shape == (n, n)
        assert np.allclose(np.diag(matrix), 0.0)
        csv_lines = (out / "matrix.csv").read_text().splitlines()
        assert len(csv_lines) == n + 1

    def test_temporal_export_differs_by_decay_only(self, corpus_dir, tmp_path):
        plain_dir, decayed_dir = tmp_path / "plain", tmp_path / "decayed"
        assert run_cli("export", "--corpus", str(corpus_dir), "--metric", "SED",
                       "--window", "2016-03,2016-05", "--out", str(plain_dir)) == 0
        assert run_cli("export", "--corpus", str(corpus_dir), "--metric", "t-SED",
                       "--theta", "0.1", "--window", "2016-03,2016-05",
                       "--out", str(decayed_dir)) == 0
        plain = read_matrix_binary(plain_dir / "matrix.bin")
        decayed = read_matrix_binary(decayed_dir / "matrix.bin")
        stamps = [int(line.split("\t")[3])
                  for line in (plain_dir / "sidecar.tsv").read_text().splitlines()[1:]]
        ts = np.array(stamps)
        factor = np.exp(0.1 * np.abs(ts[:, None] - ts[None, :]) / 86400.0)
        assert np.allclose(decayed, plain * factor, rtol=1e-9)

    def test_empty_window_exit_2(self, corpus_dir, tmp_path):
        assert run_cli("export", "--corpus", str(corpus_dir), "--metric", "SED",
                       "--window", "2031-01", "--out", str(tmp_path / "e")) == 2

    def test_temporal_metric_requires_theta(self, corpus_dir, tmp_path):
        assert run_cli("export", "--corpus", str(corpus_dir), "--metric", "t-SED",
                       "--window", "2016-03", "--out", str(tmp_path / "e")) == 2

    def test_limit_subsamples_deterministically(self, corpus_dir, tmp_path):
        out1, out2 = tmp_path / "l1", tmp_path / "l2"
        for out in (out1, out2):
            assert run_cli("export", "--corpus", str(corpus_dir), "--metric", "ED",
                           "--window", "2016-03", "--limit", "5", "--seed", "9",
                           "--out", str(out)) == 0
        assert (out1 / "sidecar.tsv").read_bytes() == (out2 / "sidecar.tsv").read_bytes()
        assert (out1 / "matrix.bin").read_bytes() == (out2 / "matrix.bin").read_bytes()
        assert len((out1 / "sidecar.tsv").read_text().splitlines()) == 6


class TestWindowParsing:
    def test_december_rolls_into_next_year(self):
        from tracesim.cli import _parse_window
        import calendar
        start, end = _parse_window("2016-12")
        assert start == calendar.timegm((2016, 12, 1, 0, 0, 0))
        assert end == calendar.timegm((2017, 1, 1, 0, 0, 0))

    def test_explicit_range_end_exclusive(self):
        from tracesim.cli import _parse_window
        import calendar
        start, end = _parse_window("2016-09-10,2016-09-20")
        assert start == calendar.timegm((2016, 9, 10, 0, 0, 0))
        assert end == calendar.timegm((2016, 9, 20, 0, 0, 0))

    def test_reversed_range_rejected(self):
        from tracesim.cli import _parse_window
        from tracesim.corpus import ConfigurationError
        with pytest.raises(ConfigurationError):
            _parse_window("2016-09-20,2016-09-10")


def test_console_entry_point(tmp_path):
    csv_path = write_csv(small_rows(), tmp_path / "small.csv")
    proc = subprocess.run(
        [sys.executable, "-m", "tracesim.cli", "ingest", "--input", str(csv_path),
         "--min-count", "1", "--out", str(tmp_path / "corpus")],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
