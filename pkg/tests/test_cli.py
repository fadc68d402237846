"""The radioae command: exit codes, printed contracts, file outputs."""

import csv
import struct

import pytest

from radioae.cli import EXIT_CONFIG, EXIT_OK, EXIT_USAGE, main

SMALL_CONFIG = """\
[dataset]
n_examples = 200
seed = 5

[train]
epochs = 2
batch_size = 64
val_examples = 40
seed = 5
"""


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A tiny end-to-end run shared by the read-only CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "run.cfg"
    cfg.write_text(SMALL_CONFIG)
    dataset = root / "data.raed"
    ckpt = root / "model.raem"
    assert main(["gen-dataset", "--config", str(cfg), "--out", str(dataset)]) == EXIT_OK
    assert main(["train", "--config", str(cfg), "--dataset", str(dataset),
                 "--out", str(ckpt)]) == EXIT_OK
    return root, cfg, dataset, ckpt


class TestGenDataset:
    def test_writes_expected_header(self, workspace):
        _, _, dataset, _ = workspace
        raw = dataset.read_bytes()
        magic, version, mod, n, length, seed = struct.unpack_from("<4sIBIIQ", raw)
        assert (magic, version, mod, n, length, seed) == (b"RAED", 1, 0, 200, 88, 5)

    def test_gfsk_flag_sets_modulation_code(self, workspace, tmp_path):
        _, cfg, _, _ = workspace
        out = tmp_path / "g.raed"
        assert main(["gen-dataset", "--config", str(cfg), "--mod", "gfsk",
                     "--out", str(out)]) == EXIT_OK
        assert out.read_bytes()[8] == 1

    def test_same_seed_is_byte_identical(self, workspace, tmp_path):
        _, cfg, dataset, _ = workspace
        again = tmp_path / "again.raed"
        assert main(["gen-dataset", "--config", str(cfg), "--out", str(again)]) == EXIT_OK
        assert again.read_bytes() == dataset.read_bytes()

    def test_thread_cap_does_not_change_bytes(self, workspace, tmp_path, monkeypatch):
        _, cfg, dataset, _ = workspace
        monkeypatch.setenv("RADIO_AE_THREADS", "4")
        out = tmp_path / "threaded.raed"
        assert main(["gen-dataset", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        assert out.read_bytes() == dataset.read_bytes()

    def test_bad_thread_cap_is_config_error(self, workspace, tmp_path, monkeypatch):
        _, cfg, _, _ = workspace
        monkeypatch.setenv("RADIO_AE_THREADS", "many")
        assert main(["gen-dataset", "--config", str(cfg),
                     "--out", str(tmp_path / "x.raed")]) == EXIT_CONFIG

    def test_missing_out_is_usage_error(self):
        assert main(["gen-dataset"]) == EXIT_USAGE

    def test_bad_config_is_config_error(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("[dataset]\nwhatever = 3\n")
        out = tmp_path / "d.raed"
        assert main(["gen-dataset", "--config", str(cfg),
                     "--out", str(out)]) == EXIT_CONFIG


class TestTrain:
    def test_prints_parameter_counts(self, workspace, capsys, tmp_path):
        _, cfg, dataset, _ = workspace
        out = tmp_path / "m.raem"
        code = main(["train", "--config", str(cfg), "--dataset", str(dataset),
                     "--epochs", "1", "--out", str(out)])
        captured = capsys.readouterr()
        assert code == EXIT_OK
        assert "conv=161 dense=30448" in captured.out

    def test_epochs_flag_controls_history_rows(self, workspace, tmp_path):
        _, cfg, dataset, _ = workspace
        out = tmp_path / "m.raem"
        hist = tmp_path / "h.csv"
        assert main(["train", "--config", str(cfg), "--dataset", str(dataset),
                     "--epochs", "1", "--out", str(out), "--history", str(hist)]) == EXIT_OK
        with open(hist, newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 2  # header + 1 epoch

    def test_missing_dataset_flag_is_usage_error(self, tmp_path):
        assert main(["train", "--out", str(tmp_path / "m.raem")]) == EXIT_USAGE

    def test_corrupt_dataset_is_format_error(self, tmp_path):
        bad = tmp_path / "bad.raed"
        bad.write_bytes(b"garbage")
        assert main(["train", "--dataset", str(bad),
                     "--out", str(tmp_path / "m.raem")]) == EXIT_CONFIG

    def test_nonexistent_dataset_is_config_error(self, tmp_path):
        assert main(["train", "--dataset", str(tmp_path / "missing.raed"),
                     "--out", str(tmp_path / "m.raem")]) == EXIT_CONFIG


class TestEval:
    def test_prints_headline_metrics(self, workspace, capsys, tmp_path):
        _, _, dataset, ckpt = workspace
        out = tmp_path / "metrics.csv"
        code = main(["eval", "--checkpoint", str(ckpt), "--dataset", str(dataset),
                     "--out", str(out)])
        captured = capsys.readouterr()
        assert code == EXIT_OK
        assert "compression_ratio=16.0" in captured.out
        assert "n_eff_bits=4" in captured.out

    def test_metrics_csv_matches_printed_values(self, workspace, capsys, tmp_path):
        _, _, dataset, ckpt = workspace
        out = tmp_path / "metrics.csv"
        main(["eval", "--checkpoint", str(ckpt), "--dataset", str(dataset),
              "--out", str(out)])
        printed = {}
        for line in capsys.readouterr().out.splitlines():
            if "=" in line and not line.startswith("wrote"):
                key, value = line.split("=", 1)
                printed[key] = value
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["metric", "value"]
        for key, value in rows[1:]:
            assert printed[key] == value

    def test_corrupt_checkpoint_is_format_error(self, workspace, tmp_path):
        _, _, dataset, _ = workspace
        bad = tmp_path / "bad.raem"
        bad.write_bytes(b"RAEMgarbagegarbage")
        assert main(["eval", "--checkpoint", str(bad),
                     "--dataset", str(dataset)]) == EXIT_CONFIG


class TestExport:
    def test_manifest_lists_emitted_files(self, workspace, tmp_path):
        _, _, dataset, ckpt = workspace
        out_dir = tmp_path / "export"
        assert main(["export", "--checkpoint", str(ckpt), "--dataset", str(dataset),
                     "--out-dir", str(out_dir), "--n", "2"]) == EXIT_OK
        manifest = (out_dir / "MANIFEST").read_text().splitlines()
        for name in manifest:
            assert (out_dir / name).exists()
        assert sorted(manifest) == ["dec_filter.csv", "dense_enc_rows.csv",
                                    "enc_filters.csv", "reconstructions.csv"]

    def test_two_reconstruction_blocks(self, workspace, tmp_path):
        _, _, dataset, ckpt = workspace
        out_dir = tmp_path / "export"
        main(["export", "--checkpoint", str(ckpt), "--dataset", str(dataset),
              "--out-dir", str(out_dir), "--n", "2"])
        with open(out_dir / "reconstructions.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert len(rows) == 1 + 2 * 5

    def test_rerun_is_byte_identical(self, workspace, tmp_path):
        _, _, dataset, ckpt = workspace
        d1, d2 = tmp_path / "e1", tmp_path / "e2"
        for d in (d1, d2):
            assert main(["export", "--checkpoint", str(ckpt), "--dataset",
                         str(dataset), "--out-dir", str(d), "--n", "2"]) == EXIT_OK
        for name in ("enc_filters.csv", "dec_filter.csv", "dense_enc_rows.csv",
                     "reconstructions.csv", "MANIFEST"):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()


class TestUsage:
    def test_no_command_is_usage_error(self):
        assert main([]) == EXIT_USAGE

    def test_unknown_command_is_usage_error(self):
        assert main(["frobnicate"]) == EXIT_USAGE
