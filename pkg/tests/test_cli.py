import csv
import json

import pytest

from dbcmo.cli import main
from dbcmo.cluster import ClusterLabeling
from dbcmo.fileio import read_dataset, read_truth, write_dataset


@pytest.fixture
def checkins_file(tmp_path, checkins):
    path = tmp_path / "t1.jsonl"
    write_dataset(checkins, path)
    return path


@pytest.fixture
def small(tmp_path, capsys):
    out = tmp_path / "small"
    assert main(["generate", "--scale", "--n", "60", "--m", "8", "--seed", "1", "--out", str(out)]) == 0
    capsys.readouterr()
    return out


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestGenerate:
    def test_layout(self, tmp_path, capsys):
        assert main(["generate", "--layout", "twocircles", "--seed", "7", "--out", str(tmp_path / "tc")]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["objects"] == 500
        ds, _ = read_dataset(tmp_path / "tc" / "dataset.jsonl")
        truth = read_truth(tmp_path / "tc" / "truth.csv")
        assert len(ds) == 500 and len(set(truth.values())) == 4

    def test_scale_defaults(self, small):
        ds, _ = read_dataset(small / "dataset.jsonl")
        assert len(ds) == 60 and ds.dimensionality == 2

    def test_missing_out(self):
        with pytest.raises(SystemExit) as exc:
            main(["generate", "--layout", "jain"])
        assert exc.value.code != 0

    def test_scale_flags_need_scale(self, tmp_path):
        assert main(["generate", "--layout", "jain", "--n", "10", "--out", str(tmp_path)]) == 2


class TestCluster:
    def test_checkins(self, tmp_path, checkins_file, capsys):
        out = tmp_path / "labels.csv"
        rc = main(["cluster", "--in", str(checkins_file), "--out", str(out), "--minobs", "1", "--alpha", "0.5", "--eps", "25"])
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        assert report["cluster_count"] == 1 and report["noise_count"] == 0
        assert ClusterLabeling.from_csv(out).labels == {"paul": 0, "qiana": 0}

    def test_pruning_levels_agree(self, tmp_path, small, capsys):
        outs = []
        for level in ("P0", "P1-4"):
            out = tmp_path / f"{level}.csv"
            args = ["cluster", "--in", str(small / "dataset.jsonl"), "--out", str(out), "--pruning", level]
            assert main(args + ["--report", str(tmp_path / f"{level}.json")]) == 0
            outs.append(out.read_text())
        assert outs[0] == outs[1]
        p0 = json.loads((tmp_path / "P0.json").read_text())["prune_stats"]
        p4 = json.loads((tmp_path / "P1-4.json").read_text())["prune_stats"]
        assert p0["distance_calls_made"] >= p4["distance_calls_made"]

    @pytest.mark.parametrize("algo", ["dbcmo", "fdbscan", "expdbscan"])
    def test_metrics(self, tmp_path, small, algo):
        report, metrics = tmp_path / "r.json", tmp_path / "m.csv"
        args = ["cluster", "--algo", algo, "--in", str(small / "dataset.jsonl"), "--out", str(tmp_path / "l.csv"),
                "--truth", str(small / "truth.csv"), "--metrics", str(metrics), "--report", str(report)]
        assert main(args) == 0
        data = json.loads(report.read_text())
        assert data["algorithm"] == algo and data["params"]["eps_source"].startswith("k-distance")
        assert 0.0 <= data["metrics"]["f1"] <= 1.0
        (row,) = _rows(metrics)
        assert row["algorithm"] == algo

    @pytest.mark.parametrize(
        "extra",
        [["--algo", "expdbscan", "--alpha", "0.5"], ["--algo", "dbcmo", "--rp", "0.5"], ["--algo", "fdbscan", "--pruning", "P0"]],
    )
    def test_invalid_combinations(self, tmp_path, checkins_file, extra):
        rc = main(["cluster", "--in", str(checkins_file), "--out", str(tmp_path / "l.csv"), "--eps", "25"] + extra)
        assert rc == 2

    def test_metrics_needs_truth(self, tmp_path, checkins_file):
        rc = main(["cluster", "--in", str(checkins_file), "--out", str(tmp_path / "l.csv"), "--eps", "25",
                   "--metrics", str(tmp_path / "m.csv")])
        assert rc == 2

    def test_missing_input(self, tmp_path):
        assert main(["cluster", "--in", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "l.csv"), "--eps", "1"]) == 1

    def test_bad_eps(self, tmp_path, checkins_file):
        with pytest.raises(SystemExit):
            main(["cluster", "--in", str(checkins_file), "--out", str(tmp_path / "l.csv"), "--eps", "-3"])


class TestEvaluate:
    def test_scores_labels(self, tmp_path, capsys):
        (tmp_path / "l.csv").write_text("id,label,core\na,0,1\nb,0,1\nc,0,0\nd,1,1\n")
        (tmp_path / "t.csv").write_text("id,label\na,x\nb,x\nc,y\nd,y\n")
        assert main(["evaluate", "--labels", str(tmp_path / "l.csv"), "--truth", str(tmp_path / "t.csv")]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[1].split(",")[4] == "0.400000"


class TestBenchAndSweep:
    def test_bench_pruning(self, tmp_path, small, capsys):
        out = tmp_path / "bench.csv"
        assert main(["bench-pruning", "--in", str(small / "dataset.jsonl"), "--out", str(out), "--repeats", "1"]) == 0
        rows = _rows(out)
        assert [r["level"] for r in rows] == ["P0", "P1", "P1-2", "P1-3", "P1-4"]
        calls = [int(r["distance_calls_made"]) for r in rows]
        assert all(a >= b for a, b in zip(calls, calls[1:]))
        assert len({(r["clusters"], r["noise"]) for r in rows}) == 1

    def test_bench_single_object(self, tmp_path, paul, capsys):
        from dbcmo.model import Dataset

        write_dataset(Dataset.from_objects([paul]), tmp_path / "one.jsonl")
        assert main(["bench-pruning", "--in", str(tmp_path / "one.jsonl"), "--eps", "1", "--minobs", "1",
                     "--repeats", "1", "--out", str(tmp_path / "b.csv")]) == 0
        assert len({r["clusters"] for r in _rows(tmp_path / "b.csv")}) == 1

    def test_sweep_single_alpha(self, tmp_path, small, capsys):
        out = tmp_path / "sweep.csv"
        assert main(["sweep-alpha", "--in", str(small / "dataset.jsonl"), "--alphas", "0.5", "--out", str(out)]) == 0
        assert len(_rows(out)) == 1

    def test_sweep_all(self, tmp_path, small, capsys):
        out = tmp_path / "sweep.csv"
        assert main(["sweep-alpha", "--in", str(small / "dataset.jsonl"), "--alphas", "0.3,0.9", "--algo", "all",
                     "--out", str(out)]) == 0
        assert [(r["algorithm"], r["alpha"]) for r in _rows(out)] == [
            (a, x) for a in ("dbcmo", "fdbscan", "expdbscan") for x in ("0.3", "0.9")
        ]

    def test_sweep_alpha_range(self, tmp_path, small):
        assert main(["sweep-alpha", "--in", str(small / "dataset.jsonl"), "--alphas", "0,0.5"]) == 2


class TestKdistAndDump:
    def test_checkins_profile(self, tmp_path, checkins_file, capsys):
        out = tmp_path / "k.csv"
        assert main(["kdist", "--in", str(checkins_file), "--k", "1", "--alpha", "0.5", "--out", str(out)]) == 0
        rows = _rows(out)
        assert len(rows) == 2
        assert all(float(r["kdist"]) == pytest.approx(21.80, abs=0.02) for r in rows)

    def test_k_too_large(self, checkins_file):
        assert main(["kdist", "--in", str(checkins_file), "--k", "2"]) == 2

    def test_dump(self, checkins_file, capsys):
        assert main(["dump-tree", "--in", str(checkins_file)]) == 0
        assert "object paul" in capsys.readouterr().out
        assert main(["dump-tree", "--in", str(checkins_file), "--id", "qiana", "--fanout", "3"]) == 0
        assert "instance 5" in capsys.readouterr().out
        assert main(["dump-tree", "--in", str(checkins_file), "--id", "bob"]) == 2
