"""End-to-end checks of the command line driver on a miniature run."""

import configparser
import csv
import io
from contextlib import redirect_stdout, redirect_stderr
from pathlib import Path

import numpy as np
import pytest

from patn.cli import main


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        rc = main(list(argv))
    return rc, out.getvalue(), err.getvalue()


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@pytest.fixture(scope="session")
def mini_run(tmp_path_factory):
    """A complete tiny pipeline: ingest through evaluate and export."""
    root = tmp_path_factory.mktemp("cli")
    run = root / "run1"
    data = root / "corpus"
    rc, out, err = run_cli(
        "ingest", "--run", str(run), "--data-root", str(data),
        "--synthetic", "--synthetic-subjects", "6",
        "--synthetic-seconds", "18", "--frame-sec", "0.5",
        "--t-in", "12", "--t-out", "4", "--stride", "4",
        "--static-recordings", "2", "--static-seconds", "12",
        "--split-ratio", "0.7", "--seed", "3")
    assert rc == 0, err
    rc, out, err = run_cli(
        "train-attacker", "--run", str(run), "--arch", "lstm",
        "--epochs", "12", "--patience", "12", "--seed", "1")
    assert rc == 0, err
    rc, out, err = run_cli(
        "train-patn", "--run", str(run), "--epochs", "8", "--hidden", "16",
        "--lr-halving-period", "4", "--seed", "5")
    assert rc == 0, err
    rc, out, err = run_cli(
        "train-patn", "--run", str(run), "--epochs", "4", "--hidden", "16",
        "--lr-halving-period", "4", "--seed", "5", "--no-hato")
    assert rc == 0, err
    return run


class TestUsageErrors:
    def test_no_command(self):
        rc, _, _ = run_cli()
        assert rc == 1

    def test_unknown_command(self):
        rc, _, _ = run_cli("frobnicate", "--run", "x")
        assert rc == 1

    def test_missing_required_flag(self):
        rc, _, _ = run_cli("ingest", "--run", "x")
        assert rc == 1

    def test_missing_dataset_is_data_error(self, tmp_path):
        rc, _, err = run_cli("train-attacker", "--run",
                             str(tmp_path / "nope"))
        assert rc == 2
        assert "error" in err

    def test_evaluate_without_generator(self, tmp_path):
        rc, _, _ = run_cli("evaluate", "--run", str(tmp_path / "nope"))
        assert rc == 2


class TestIngest:
    def test_artifacts(self, mini_run):
        assert (mini_run / "dataset.npz").exists()
        assert (mini_run / "manifest.ini").exists()
        cp = configparser.ConfigParser()
        cp.read(mini_run / "manifest.ini")
        assert cp.getint("pipeline", "t_in") == 12
        assert cp.getint("pipeline", "t_out") == 4
        eps = [float(v) for k, v in cp["bounds"].items()
               if k.startswith("eps_")
               and not k.startswith(("eps_data_", "eps_natural_"))]
        assert len(eps) == 6
        assert all(e > 0 for e in eps)

    def test_reingest_idempotent_layout(self, mini_run, tmp_path):
        # same corpus, fresh run dir: budgets must come out identical
        cp = configparser.ConfigParser()
        cp.read(mini_run / "manifest.ini")
        data = cp.get("dataset", "root")
        run2 = tmp_path / "again"
        rc, _, err = run_cli(
            "ingest", "--run", str(run2), "--data-root", data,
            "--frame-sec", "0.5", "--t-in", "12", "--t-out", "4",
            "--stride", "4", "--static-recordings", "2",
            "--static-seconds", "12", "--split-ratio", "0.7", "--seed", "3")
        assert rc == 0, err
        cp2 = configparser.ConfigParser()
        cp2.read(run2 / "manifest.ini")
        assert dict(cp2["bounds"]) == dict(cp["bounds"])


class TestTraining:
    def test_attacker_artifacts(self, mini_run):
        cp = configparser.ConfigParser()
        cp.read(mini_run / "manifest.ini")
        ck = cp.get("attacker", "checkpoint")
        assert (mini_run / ck).exists()
        assert 0.0 <= cp.getfloat("attacker", "val_acc") <= 1.0

    def test_patn_artifacts(self, mini_run):
        assert (mini_run / "patn.bin").exists()
        assert (mini_run / "patn_nohato.bin").exists()
        header, rows = read_csv(mini_run / "patn_losses.csv")
        assert header[0] == "epoch"
        assert len(rows) == 8

    def test_nohato_loss_log_zero_offset_term(self, mini_run):
        header, rows = read_csv(mini_run / "patn_nohato_losses.csv")
        col = header.index("hato")
        assert all(float(r[col]) == 0.0 for r in rows)


class TestEvaluateAndFriends:
    @pytest.fixture(scope="session")
    def evaluated(self, mini_run):
        rc, out, err = run_cli("baseline", "--run", str(mini_run),
                               "--kind", "uap", "--epochs", "3")
        assert rc == 0, err
        rc, out, err = run_cli("evaluate", "--run", str(mini_run),
                               "--seed", "9")
        assert rc == 0, err
        return mini_run

    def test_privacy_table(self, evaluated):
        header, rows = read_csv(evaluated / "privacy.csv")
        assert header == ["attack", "asr", "eer", "auc", "f1", "n"]
        names = [r[0] for r in rows]
        assert names == ["raw", "patn", "dp", "fgsm", "pgd", "uap"]
        for r in rows:
            assert 0.0 <= float(r[1]) <= 100.0
            assert 0.0 <= float(r[2]) <= 1.0

    def test_fidelity_table(self, evaluated):
        header, rows = read_csv(evaluated / "fidelity.csv")
        assert [r[0] for r in rows] == ["patn", "gauss5x"]
        patn = {k: float(v) for k, v in zip(header[1:], rows[0][1:])}
        assert patn["dtw"] >= 0 and patn["rmse"] >= 0

    def test_utility_table(self, evaluated):
        header, rows = read_csv(evaluated / "utility.csv")
        metrics = {r[0]: (float(r[1]), float(r[2])) for r in rows}
        assert set(metrics) == {"steps", "step_rel_err", "har_eer", "har_auc"}
        assert metrics["steps"][0] >= 0

    def test_evaluate_deterministic(self, evaluated, tmp_path):
        before = (evaluated / "privacy.csv").read_bytes()
        rc, _, err = run_cli("evaluate", "--run", str(evaluated),
                             "--seed", "9")
        assert rc == 0, err
        assert (evaluated / "privacy.csv").read_bytes() == before

    def test_ablation_table(self, evaluated):
        rc, _, err = run_cli("ablate-hato", "--run", str(evaluated),
                             "--tau", "2")
        assert rc == 0, err
        header, rows = read_csv(evaluated / "ablation.csv")
        key = [(r[0], int(r[1])) for r in rows]
        assert key == [("hato", 0), ("hato", 2),
                       ("no_hato", 0), ("no_hato", 2)]

    def test_transfer_table(self, evaluated):
        rc, _, err = run_cli("transfer", "--run", str(evaluated),
                             "--archs", "cnn", "--lengths", "6",
                             "--epochs", "8", "--seed", "3")
        assert rc == 0, err
        header, rows = read_csv(evaluated / "transfer.csv")
        names = sorted(r[0] for r in rows)
        assert names == ["arch_cnn", "len_6"]

    def test_plots(self, evaluated):
        for kind in ("losses", "signals", "roc"):
            rc, _, err = run_cli("plot", "--run", str(evaluated),
                                 "--kind", kind)
            assert rc == 0, err
            assert (evaluated / f"plot_{kind}.png").stat().st_size > 0


class TestSimulateExport:
    def test_simulate_roundtrip(self, mini_run, tmp_path):
        out = tmp_path / "adv.csv"
        rc, text, err = run_cli("simulate", "--run", str(mini_run),
                                "--output", str(out),
                                "--latency-trials", "20")
        assert rc == 0, err
        assert out.exists()
        assert "latency per generation" in text

    def test_export_reload(self, mini_run, tmp_path):
        out = tmp_path / "bundle.bin"
        rc, text, err = run_cli("export", "--run", str(mini_run),
                                "--out", str(out))
        assert rc == 0, err
        assert "passed" in text
        assert out.stat().st_size < 2 * 1024 * 1024

    def test_run_root_env(self, mini_run, monkeypatch):
        monkeypatch.setenv("PATN_RUN_ROOT", str(mini_run.parent))
        rc, text, err = run_cli("simulate", "--run", mini_run.name,
                                "--latency-trials", "5")
        assert rc == 0, err
