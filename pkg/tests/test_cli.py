import subprocess
import sys

import numpy as np
import pytest

from vuclust import metrics
from vuclust.cli import main, parse_blobs, read_report, write_report
from vuclust.data import MultiViewDataset, load_dataset, save_dataset

BLOBS = "n=300,k=3,v=3,dims=5:5:5,sep=20"


def synth(tmp_path, name="D", rho="0", seed="7", blobs=BLOBS):
    out = tmp_path / name
    assert main(["synth", "--blobs", blobs, "--rho", rho, "--seed", seed, "--out", str(out)]) == 0
    return out


def usage_exit(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2
    return capsys.readouterr().err


class TestSynth:
    def test_writes_perm_files(self, tmp_path):
        out = synth(tmp_path)
        assert {"manifest.txt", "labels.txt", "perm_1.txt", "perm_2.txt", "perm_3.txt"} <= {p.name for p in out.iterdir()}
        ds = load_dataset(out)
        assert ds.n == 300 and ds.v == 3 and ds.rho == 0.0

    def test_rho_one_identity(self, tmp_path):
        ds = load_dataset(synth(tmp_path, rho="1"))
        assert all(np.array_equal(p, np.arange(300)) for p in ds.truth_perms)

    def test_byte_identical_reruns(self, tmp_path):
        a, b = synth(tmp_path, "A"), synth(tmp_path, "B")
        for f in a.iterdir():
            assert f.read_bytes() == (b / f.name).read_bytes()

    def test_from_input_directory(self, tmp_path, rng):
        src = tmp_path / "aligned"
        save_dataset(MultiViewDataset([rng.standard_normal((2, 10))] * 2, labels=np.arange(10) % 2), src)
        out = tmp_path / "shuffled"
        assert main(["synth", "--input", str(src), "--rho", "0.5", "--seed", "1", "--out", str(out)]) == 0
        assert load_dataset(out).aligned_count == 5

    @pytest.mark.parametrize("argv", [
        ["--rho", "1.5", "--blobs", BLOBS],
        ["--rho", "0"],
        ["--rho", "0", "--blobs", "n=10,k=2"],
        ["--rho", "0", "--blobs", "n=10,k=2,v=2,sep=1,bogus=3"],
        ["--rho", "0", "--blobs", "n=10,k=2,v=2,dims=3,sep=1"],
    ])
    def test_usage_errors(self, tmp_path, capsys, argv):
        usage_exit(["synth", *argv, "--out", str(tmp_path / "x")], capsys)

    def test_parse_blobs(self):
        assert parse_blobs("n=10,k=2,v=2,dims=3:4,sep=1.5,noise=0.5") == {
            "n": 10, "k": 2, "v": 2, "separation": 1.5, "dims": [3, 4], "noise": 0.5,
        }


class TestRun:
    def test_aligned_run_report(self, tmp_path):
        data = synth(tmp_path, rho="1")
        out = tmp_path / "R"
        assert main(["run", str(data), "--out", str(out)]) == 0
        report = read_report(out / "report.txt")
        assert report["acc"] >= 0.95
        assert set(report) == {"acc", "nmi", "fscore", "perm_recovery_1", "perm_recovery_2",
                               "perm_recovery_3", "objective", "iters", "seconds"}
        lines = (out / "trace.csv").read_text().splitlines()
        assert lines[0] == "iter,objective,template,phi_1,phi_2,phi_3"
        assert len(lines) == report["iters"] + 1

    def test_zero_iterations_header_only(self, tmp_path):
        data = synth(tmp_path)
        out = tmp_path / "R"
        assert main(["run", str(data), "--max-iter", "0", "--out", str(out)]) == 0
        assert (out / "trace.csv").read_text().splitlines() == ["iter,objective,template,phi_1,phi_2,phi_3"]

    def test_alpha_usage_error(self, tmp_path, capsys):
        data = synth(tmp_path)
        err = usage_exit(["run", str(data), "--alpha", "1.0", "--out", str(tmp_path / "R")], capsys)
        assert "alpha must exceed 1" in err

    def test_missing_dataset_usage_error(self, tmp_path, capsys):
        usage_exit(["run", str(tmp_path / "nope"), "--out", str(tmp_path / "R")], capsys)

    def test_bad_anchor_count_usage_error(self, tmp_path, capsys):
        data = synth(tmp_path)
        usage_exit(["run", str(data), "--anchors", "9", "--out", str(tmp_path / "R")], capsys)

    def test_corrupt_dataset_exit_one(self, tmp_path, capsys):
        data = synth(tmp_path)
        (data / "view_2.txt").write_text("1 2\n")
        assert main(["run", str(data), "--out", str(tmp_path / "R")]) == 1
        assert "view_2.txt" in capsys.readouterr().err

    def test_numerical_failure_exit_one(self, tmp_path, capsys, monkeypatch):
        from vuclust import model

        data = synth(tmp_path)
        monkeypatch.setattr(model, "objective", lambda *a: np.inf)
        assert main(["run", str(data), "--max-iter", "3", "--out", str(tmp_path / "R")]) == 1
        assert "iteration 1" in capsys.readouterr().err

    def test_restarts_keep_lowest_objective(self, tmp_path):
        data = synth(tmp_path)
        objs = []
        for seed in ("0", "1"):
            out = tmp_path / f"R{seed}"
            main(["run", str(data), "--max-iter", "5", "--seed", seed, "--out", str(out)])
            objs.append(read_report(out / "report.txt")["objective"])
        out = tmp_path / "best"
        main(["run", str(data), "--max-iter", "5", "--restarts", "2", "--out", str(out)])
        assert read_report(out / "report.txt")["objective"] == min(objs)

    def test_deterministic_outputs(self, tmp_path):
        data = synth(tmp_path)
        for name in ("R1", "R2"):
            main(["run", str(data), "--max-iter", "5", "--out", str(tmp_path / name)])
        assert (tmp_path / "R1" / "trace.csv").read_bytes() == (tmp_path / "R2" / "trace.csv").read_bytes()
        assert (tmp_path / "R1" / "labels.txt").read_bytes() == (tmp_path / "R2" / "labels.txt").read_bytes()


class TestEval:
    def test_truth_file(self, tmp_path):
        data = synth(tmp_path)
        out = tmp_path / "E"
        assert main(["eval", "--data", str(data), "--pred", str(data / "labels.txt"), "--out", str(out)]) == 0
        assert read_report(out / "report.txt")["acc"] == 1.0

    def test_shuffled_ids(self, tmp_path):
        data = synth(tmp_path)
        labels = np.loadtxt(data / "labels.txt", dtype=int)
        pred = tmp_path / "pred.txt"
        np.savetxt(pred, np.array([3, 1, 2])[labels - 1], fmt="%d")
        main(["eval", "--data", str(data), "--pred", str(pred), "--out", str(tmp_path / "E.txt")])
        assert read_report(tmp_path / "E.txt")["acc"] == 1.0

    def test_four_sample_case(self, tmp_path):
        data = tmp_path / "small"
        save_dataset(MultiViewDataset([np.eye(4)], labels=[0, 0, 1, 1]), data)
        pred = tmp_path / "pred.txt"
        pred.write_text("1\n1\n1\n2\n")
        main(["eval", "--data", str(data), "--pred", str(pred), "--out", str(tmp_path / "E")])
        report = read_report(tmp_path / "E" / "report.txt")
        truth, guess = [0, 0, 1, 1], [0, 0, 0, 1]
        assert report["acc"] == pytest.approx(metrics.accuracy(truth, guess), rel=1e-9)
        assert report["nmi"] == pytest.approx(metrics.nmi(truth, guess), rel=1e-8)
        assert report["fscore"] == pytest.approx(0.4, rel=1e-9)

    def test_perm_recovery_from_run(self, tmp_path):
        data = synth(tmp_path)
        run = tmp_path / "R"
        main(["run", str(data), "--max-iter", "3", "--out", str(run)])
        main(["eval", "--data", str(data), "--pred", str(run / "labels.txt"), "--perms", str(run), "--out", str(tmp_path / "E")])
        a, b = read_report(run / "report.txt"), read_report(tmp_path / "E" / "report.txt")
        for key in ("acc", "nmi", "fscore", "perm_recovery_2"):
            assert a[key] == b[key]

    def test_missing_labels_usage_error(self, tmp_path, capsys):
        data = tmp_path / "nolabels"
        save_dataset(MultiViewDataset([np.eye(3)]), data)
        pred = tmp_path / "pred.txt"
        pred.write_text("1\n2\n3\n")
        err = usage_exit(["eval", "--data", str(data), "--pred", str(pred), "--out", str(tmp_path / "E")], capsys)
        assert "labels" in err

    def test_wrong_length_usage_error(self, tmp_path, capsys):
        data = synth(tmp_path)
        pred = tmp_path / "pred.txt"
        pred.write_text("1\n2\n")
        usage_exit(["eval", "--data", str(data), "--pred", str(pred), "--out", str(tmp_path / "E")], capsys)


def test_report_round_trip(tmp_path, rng):
    values = {"acc": rng.uniform(), "nmi": rng.uniform(), "fscore": rng.uniform(), "objective": rng.uniform() * 1e4,
              "iters": 17, "seconds": rng.uniform()}
    write_report(tmp_path / "r.txt", values)
    back = read_report(tmp_path / "r.txt")
    assert back["iters"] == 17
    for key, value in values.items():
        assert back[key] == pytest.approx(value, rel=5e-9)


@pytest.mark.parametrize("sub", [[], ["synth"], ["run"], ["eval"]])
def test_help(sub):
    proc = subprocess.run([sys.executable, "-m", "vuclust", *sub, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "usage: vuclust" in proc.stdout
