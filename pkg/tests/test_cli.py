"""Command-line interface: argument handling, exit codes, table output."""

import subprocess
import sys

import pytest

from gcnkit.cli import (
    ResultRow,
    main,
    model_label,
    parse_k_list,
    parse_seeds,
    render_table,
)


def run_main(argv):
    """Invoke main() in process, normalizing SystemExit to a code."""
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "sbm"
    code = run_main(["sbm", "--out", str(path), "--per-block", "20",
                     "--blocks", "2", "--p-in", "0.3", "--p-out", "0.02",
                     "--seed", "3"])
    assert code == 0
    return path


class TestParsers:
    def test_seed_range(self):
        assert parse_seeds("0..3") == [0, 1, 2, 3]

    def test_seed_list(self):
        assert parse_seeds("4,7,2") == [4, 7, 2]

    def test_seed_single(self):
        assert parse_seeds("9") == [9]

    def test_seed_empty_range(self):
        with pytest.raises(ValueError):
            parse_seeds("5..2")

    def test_seed_garbage(self):
        with pytest.raises(ValueError):
            parse_seeds("a..b")

    def test_k_list_sorted(self):
        assert parse_k_list("3,1,2") == [1, 2, 3]

    def test_k_single(self):
        assert parse_k_list("5") == [5]

    def test_k_rejects_zero(self):
        with pytest.raises(ValueError):
            parse_k_list("0,2")

    def test_model_labels(self):
        assert model_label("gcn") == "GCN"
        assert model_label("rgcn") == "RGCN"
        assert model_label("pgcn", 2) == "PGCN (2)"
        assert model_label("prgcn", 1) == "PRGCN (1)"


class TestRenderTable:
    ROWS = [
        ResultRow("GCN", "sbm", 81.25, 0.55, 112.0, 10),
        ResultRow("PGCN (2)", "sbm", 80.0, 1.0, 99.5, 10),
    ]

    def test_tsv(self):
        out = render_table(self.ROWS, "tsv")
        lines = out.splitlines()
        assert lines[0] == "model\tdataset\taccuracy\tstd\tepochs\truns"
        assert lines[1] == "GCN\tsbm\t81.2\t0.6\t112.0\t10"
        assert lines[2] == "PGCN (2)\tsbm\t80.0\t1.0\t99.5\t10"
        assert out.endswith("\n")

    def test_markdown(self):
        out = render_table(self.ROWS, "markdown")
        lines = out.splitlines()
        assert lines[0].startswith("| model |")
        assert set(lines[1].replace("|", "").split()) == {"---"}
        assert "| GCN | sbm | 81.2 | 0.6 | 112.0 | 10 |" in lines

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            render_table(self.ROWS, "csv")


class TestSbmCommand:
    def test_writes_loadable_dataset(self, dataset_dir):
        from gcnkit.data import load_dataset

        ds = load_dataset(dataset_dir)
        assert ds.num_nodes == 40
        assert ds.num_classes == 2


class TestRunCommand:
    def test_gcn_end_to_end(self, dataset_dir, capsys):
        code = run_main(["run", "--dataset", str(dataset_dir), "--model", "gcn",
                         "--seeds", "0,1", "--max-epochs", "15",
                         "--min-epochs", "5", "--quiet"])
        assert code == 0
        out = capsys.readouterr().out
        lines = out.splitlines()
        assert lines[0].split("\t") == ["model", "dataset", "accuracy", "std",
                                        "epochs", "runs"]
        cells = lines[1].split("\t")
        assert cells[0] == "GCN"
        assert cells[1] == "sbm"
        assert cells[5] == "2"
        assert 0.0 <= float(cells[2]) <= 100.0

    def test_k_sweep_rows_sorted(self, dataset_dir, capsys):
        code = run_main(["run", "--dataset", str(dataset_dir), "--model", "pgcn",
                         "--k", "2,1", "--n-walks", "300", "--seeds", "0",
                         "--max-epochs", "10", "--min-epochs", "2", "--quiet"])
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert [line.split("\t")[0] for line in lines[1:]] == \
            ["PGCN (1)", "PGCN (2)"]

    def test_rgcn_and_prgcn(self, dataset_dir, capsys):
        code = run_main(["run", "--dataset", str(dataset_dir), "--model", "rgcn",
                         "--reg-weight", "1e-3", "--seeds", "0",
                         "--max-epochs", "10", "--min-epochs", "2", "--quiet"])
        assert code == 0
        assert capsys.readouterr().out.splitlines()[1].startswith("RGCN\t")

        code = run_main(["run", "--dataset", str(dataset_dir), "--model", "prgcn",
                         "--k", "1", "--n-walks", "300", "--reg-weight", "1e-3",
                         "--seeds", "0", "--max-epochs", "10",
                         "--min-epochs", "2", "--quiet"])
        assert code == 0
        assert capsys.readouterr().out.splitlines()[1].startswith("PRGCN (1)\t")

    def test_out_file(self, dataset_dir, tmp_path, capsys):
        target = tmp_path / "table.tsv"
        code = run_main(["run", "--dataset", str(dataset_dir), "--model", "gcn",
                         "--seeds", "0", "--max-epochs", "8",
                         "--min-epochs", "2", "--quiet", "--out", str(target)])
        assert code == 0
        assert capsys.readouterr().out == ""
        assert target.read_text().startswith("model\t")

    def test_markdown_format(self, dataset_dir, capsys):
        code = run_main(["run", "--dataset", str(dataset_dir), "--model", "gcn",
                         "--seeds", "0", "--max-epochs", "8", "--min-epochs", "2",
                         "--quiet", "--format", "markdown"])
        assert code == 0
        assert capsys.readouterr().out.startswith("| model |")

    def test_epoch_logs_on_stderr(self, dataset_dir, capsys):
        run_main(["run", "--dataset", str(dataset_dir), "--model", "gcn",
                  "--seeds", "0", "--max-epochs", "4", "--min-epochs", "2"])
        captured = capsys.readouterr()
        assert "epoch=1\t" in captured.err
        assert "val_loss=" in captured.err
        assert "epoch=" not in captured.out

    def test_quiet_suppresses_logs(self, dataset_dir, capsys):
        run_main(["run", "--dataset", str(dataset_dir), "--model", "gcn",
                  "--seeds", "0", "--max-epochs", "4", "--min-epochs", "2",
                  "--quiet"])
        assert capsys.readouterr().err == ""


class TestExitCodes:
    def test_usage_error_k_on_gcn(self, dataset_dir):
        assert run_main(["run", "--dataset", str(dataset_dir), "--model", "gcn",
                         "--k", "2", "--quiet"]) == 2

    def test_usage_error_missing_k(self, dataset_dir):
        assert run_main(["run", "--dataset", str(dataset_dir), "--model", "pgcn",
                         "--quiet"]) == 2

    def test_usage_error_missing_reg_weight(self, dataset_dir):
        assert run_main(["run", "--dataset", str(dataset_dir), "--model", "rgcn",
                         "--quiet"]) == 2

    def test_usage_error_reg_weight_on_gcn(self, dataset_dir):
        assert run_main(["run", "--dataset", str(dataset_dir), "--model", "gcn",
                         "--reg-weight", "0.1", "--quiet"]) == 2

    def test_usage_error_bad_seeds(self, dataset_dir):
        assert run_main(["run", "--dataset", str(dataset_dir), "--model", "gcn",
                         "--seeds", "5..1", "--quiet"]) == 2

    def test_usage_error_bad_prune(self, dataset_dir):
        assert run_main(["run", "--dataset", str(dataset_dir), "--model", "gcn",
                         "--prune", "1.5", "--quiet"]) == 2

    def test_usage_error_unknown_model(self, dataset_dir):
        assert run_main(["run", "--dataset", str(dataset_dir),
                         "--model", "mlp", "--quiet"]) == 2

    def test_runtime_error_missing_dataset(self, tmp_path, capsys):
        code = run_main(["run", "--dataset", str(tmp_path / "absent"),
                         "--model", "gcn", "--quiet"])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_runtime_error_corrupt_dataset(self, dataset_dir, tmp_path, capsys):
        import shutil

        bad = tmp_path / "bad"
        shutil.copytree(dataset_dir, bad)
        (bad / "labels.tsv").write_text("0\n")
        code = run_main(["run", "--dataset", str(bad), "--model", "gcn",
                         "--quiet"])
        assert code == 1
        assert "labels" in capsys.readouterr().err

    def test_runtime_error_min_epochs_above_max(self, dataset_dir, capsys):
        code = run_main(["run", "--dataset", str(dataset_dir), "--model", "gcn",
                         "--max-epochs", "10", "--quiet"])
        assert code == 1  # default minimum of 30 exceeds the cap
        assert "min_epochs" in capsys.readouterr().err


class TestSubprocess:
    def test_reruns_byte_identical(self, dataset_dir):
        cmd = [sys.executable, "-m", "gcnkit.cli", "run",
               "--dataset", str(dataset_dir), "--model", "gcn",
               "--seeds", "0,1", "--max-epochs", "12", "--min-epochs", "4",
               "--quiet"]
        first = subprocess.run(cmd, capture_output=True)
        second = subprocess.run(cmd, capture_output=True)
        assert first.returncode == second.returncode == 0
        assert first.stdout == second.stdout
        assert first.stdout.startswith(b"model\t")

    def test_console_entry_help(self):
        out = subprocess.run([sys.executable, "-m", "gcnkit.cli", "--help"],
                             capture_output=True, text=True)
        assert out.returncode == 0
        assert "run" in out.stdout and "sbm" in out.stdout
