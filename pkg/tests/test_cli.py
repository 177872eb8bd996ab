"""The command-line surface, exercised through main()."""

import os

import numpy as np
import pytest

from laco.cli import main


def _gen(tmp_path, seed=0, labels=5, train=24, valid=8, test=8):
    out = tmp_path / "data"
    rc = main([
        "gen-synth", "--out-dir", str(out), "--seed", str(seed),
        "--labels", str(labels), "--train", str(train),
        "--valid", str(valid), "--test", str(test), "--doc-len", "10",
    ])
    assert rc == 0
    return out


class TestGenSynth:
    def test_deterministic_across_invocations(self, tmp_path):
        a = _gen(tmp_path / "a", seed=7)
        b = _gen(tmp_path / "b", seed=7)
        for name in ("train.tsv", "valid.tsv", "test.tsv", "truth.tsv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_writes_corpus_and_truth_table(self, tmp_path):
        out = _gen(tmp_path)
        assert (out / "train.tsv").exists()
        assert (out / "truth.tsv").read_text().splitlines()[0].startswith("l0")


class TestStats:
    def test_prints_quantities(self, tmp_path, capsys):
        out = _gen(tmp_path)
        rc = main(["stats", "--train", str(out / "train.tsv"),
                   "--valid", str(out / "valid.tsv"),
                   "--test", str(out / "test.tsv")])
        assert rc == 0
        text = capsys.readouterr().out
        assert "documents        40" in text
        assert "labels           5" in text

    def test_csv_output(self, tmp_path):
        out = _gen(tmp_path)
        csv_path = tmp_path / "stats.csv"
        main(["stats", "--train", str(out / "train.tsv"), "--csv", str(csv_path)])
        assert csv_path.read_text().startswith("key,value\n")


class TestTrainEvalAnalyze:
    def test_full_cycle(self, tmp_path, capsys):
        data = _gen(tmp_path)
        run = tmp_path / "run"
        rc = main([
            "train", "--train", str(data / "train.tsv"),
            "--valid", str(data / "valid.tsv"),
            "--test", str(data / "test.tsv"),
            "--out-dir", str(run),
            "--layers", "1", "--heads", "2", "--hidden", "16",
            "--max-len", "24", "--batch-size", "8", "--lr", "0.01",
            "--eval-interval", "5", "--max-steps", "15", "--window", "4",
            "--ca-filters", "8", "--seed", "3",
        ])
        assert rc == 0
        for name in ("checkpoint.bin", "vocab.txt", "curve.csv", "curve.png",
                     "config_used.txt", "test_report.txt", "test_report.csv",
                     "test_predictions.tsv", "test_group_f1.png"):
            assert (run / name).exists(), name

        rc = main([
            "eval", "--checkpoint", str(run / "checkpoint.bin"),
            "--data", str(data / "test.tsv"),
            "--train", str(data / "train.tsv"),
            "--out-dir", str(tmp_path / "evalout"),
        ])
        assert rc == 0
        assert (tmp_path / "evalout" / "eval_report.csv").exists()
        assert (tmp_path / "evalout" / "eval_group_f1.png").exists()

        rc = main([
            "analyze", "--pred", str(run / "test_predictions.tsv"),
            "--train", str(data / "train.tsv"),
            "--out-dir", str(tmp_path / "anout"),
        ])
        assert rc == 0
        assert (tmp_path / "anout" / "analyze_report.csv").exists()

    def test_config_file_plus_overrides(self, tmp_path, capsys):
        data = _gen(tmp_path)
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text(
            "layers = 1\nheads = 2\nhidden = 16\nmax_len = 24\n"
            "batch_size = 8\nmax_steps = 6\neval_interval = 3\n"
            "window = 4\nca_filters = 8\nseed = 11\n"
        )
        run = tmp_path / "run2"
        rc = main(["train", "--train", str(data / "train.tsv"),
                   "--out-dir", str(run), "--config", str(cfg_file),
                   "--seed", "42"])
        assert rc == 0
        used = (run / "config_used.txt").read_text()
        assert "seed = 42" in used          # CLI override wins
        assert "hidden = 16" in used        # file value kept

    def test_kl_of_identical_files_prints_zero(self, tmp_path, capsys):
        pred = tmp_path / "pred.tsv"
        pred.write_text("a b\ta b\nb\tb c\n")
        rc = main(["analyze", "--kl", str(pred), str(pred),
                   "--out-dir", str(tmp_path)])
        assert rc == 0
        assert capsys.readouterr().out.strip() == "0.0"

    def test_analyze_curve_renders_figure(self, tmp_path):
        data = _gen(tmp_path)
        run = tmp_path / "run"
        main(["train", "--train", str(data / "train.tsv"),
              "--out-dir", str(run), "--layers", "1", "--heads", "2",
              "--hidden", "16", "--max-len", "24", "--batch-size", "8",
              "--eval-interval", "3", "--max-steps", "6", "--window", "4",
              "--ca-filters", "8"])
        out = tmp_path / "curves"
        rc = main(["analyze", "--curve", str(run / "curve.csv"),
                   "--out-dir", str(out)])
        assert rc == 0
        assert (out / "curve.png").exists()


class TestErrors:
    def test_unknown_flag_exits_nonzero(self):
        with pytest.raises(SystemExit) as err:
            main(["train", "--bogus-flag", "x"])
        assert err.value.code != 0

    def test_missing_file_reports_error(self, capsys):
        rc = main(["stats", "--train", "/nonexistent/path.tsv"])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_analyze_without_action_fails(self, tmp_path, capsys):
        rc = main(["analyze", "--out-dir", str(tmp_path)])
        assert rc == 2

    def test_invalid_config_value_reports_error(self, tmp_path, capsys):
        data = _gen(tmp_path)
        rc = main(["train", "--train", str(data / "train.tsv"),
                   "--out-dir", str(tmp_path / "x"), "--mode", "bogus"])
        assert rc == 1
        assert "error:" in capsys.readouterr().err
