"""End-to-end tests of the command-line front end."""

import csv
import io
import json

import pytest

from tbmkit.cli import main
from tbmkit.core import mass_from_dict, read_bba


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    return [dict(zip(header, row)) for row in body]


@pytest.fixture
def overlap_files(tmp_path):
    m1 = {"frame": ["A", "B"], "focal": [
        {"set": ["A"], "mass": 0.6}, {"set": ["B"], "mass": 0.1},
        {"set": ["A", "B"], "mass": 0.3}]}
    m2 = {"frame": ["B", "C"], "focal": [
        {"set": ["B"], "mass": 0.7}, {"set": ["C"], "mass": 0.2},
        {"set": ["B", "C"], "mass": 0.1}]}
    p1, p2 = tmp_path / "m1.json", tmp_path / "m2.json"
    p1.write_text(json.dumps(m1))
    p2.write_text(json.dumps(m2))
    return str(p1), str(p2)


@pytest.fixture
def sensor_files(tmp_path):
    paths = []
    for i, (focus, mass) in enumerate(
            [("C1", 0.7), ("C1", 0.8), ("C2", 0.6), ("C2", 0.9)]):
        doc = {"frame": ["C1", "C2"], "focal": [
            {"set": [focus], "mass": mass},
            {"set": ["C1", "C2"], "mass": 1 - mass}]}
        p = tmp_path / f"s{i + 1}.json"
        p.write_text(json.dumps(doc))
        paths.append(str(p))
    return paths


class TestFuse:
    def test_overlap_reproduces_reference_table(self, capsys, overlap_files):
        code, out, err = run_cli(capsys, "fuse", "--rule", "overlap",
                                 *overlap_files)
        assert code == 0
        rows = {r["set"]: r for r in parse_csv(out)}
        assert float(rows["A|C"]["mass"]) == pytest.approx(0.68, abs=5e-3)
        assert float(rows["B"]["mass"]) == pytest.approx(0.07, abs=5e-3)
        assert float(rows["A"]["pl"]) == pytest.approx(0.92, abs=5e-3)
        assert float(rows["A"]["betp"]) == pytest.approx(0.455, abs=5e-3)
        assert float(rows["C"]["betp"]) == pytest.approx(0.355, abs=5e-3)

    def test_conjunctive_normalized_categorical_idempotent(self, capsys, tmp_path):
        doc = {"frame": ["x", "y"], "focal": [{"set": ["x"], "mass": 1.0}]}
        p = tmp_path / "a.json"
        p.write_text(json.dumps(doc))
        code, out, _ = run_cli(capsys, "fuse", "--rule", "conjunctive",
                               "--normalize", str(p), str(p))
        assert code == 0
        rows = {r["set"]: r for r in parse_csv(out)}
        assert float(rows["x"]["mass"]) == 1.0

    def test_emitted_bba_reparses_identically(self, capsys, overlap_files, tmp_path):
        out_path = tmp_path / "fused.json"
        code, out, _ = run_cli(capsys, "fuse", "--rule", "overlap",
                               "--out-bba", str(out_path), *overlap_files)
        assert code == 0
        emitted = read_bba(out_path)
        again = mass_from_dict(json.loads(out_path.read_text()))
        assert emitted == again

    def test_input_files_untouched(self, capsys, overlap_files):
        before = [open(p).read() for p in overlap_files]
        run_cli(capsys, "fuse", "--rule", "overlap", *overlap_files)
        assert [open(p).read() for p in overlap_files] == before

    def test_missing_file_fails_cleanly(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "fuse", str(tmp_path / "nope.json"),
                               str(tmp_path / "nope2.json"))
        assert code == 1
        assert "error:" in err

    def test_bad_rule_is_usage_error(self, capsys, overlap_files):
        with pytest.raises(SystemExit) as exc:
            main(["fuse", "--rule", "bogus", *overlap_files])
        assert exc.value.code == 2


class TestCluster:
    def test_two_groups_best_partition(self, capsys, sensor_files):
        code, out, _ = run_cli(capsys, "cluster", "--groups", "2", *sensor_files)
        assert code == 0
        rows = parse_csv(out)
        best = [r for r in rows if r["kind"] == "best"]
        assert best[0]["partition"] == "12|34"
        assert float(best[0]["total"]) == 0.0
        partitions = [r for r in rows if r["kind"] == "partition"]
        assert len(partitions) == 7

    def test_suggested_count(self, capsys, sensor_files):
        code, out, _ = run_cli(capsys, "cluster", *sensor_files)
        assert code == 0
        suggested = [r for r in parse_csv(out) if r["kind"].startswith("suggested")]
        assert suggested[0]["kind"] == "suggested k=2"

    def test_tau_flag(self, capsys, sensor_files):
        code, out, _ = run_cli(capsys, "cluster", "--tau", "1.0", *sensor_files)
        suggested = [r for r in parse_csv(out) if r["kind"].startswith("suggested")]
        assert suggested[0]["kind"] == "suggested k=1"


class TestClassifyRoundTrip:
    def test_train_then_predict(self, capsys, tmp_path):
        train = tmp_path / "train.csv"
        train.write_text(
            "f1,f2,pkc\n" +
            "".join(f"{x},{y},A\n" for x, y in [(0, 0), (1, 0), (0, 1), (0.5, 0.5),
                                                (0.2, 0.8), (1, 1)]) +
            "".join(f"{x},{y},B\n" for x, y in [(10, 10), (11, 10), (10, 11),
                                                (10.5, 10.5), (10.2, 10.8), (11, 11)]))
        test = tmp_path / "test.csv"
        test.write_text("f1,f2,pkc\n0.4,0.4,A\n10.6,10.4,B\n")
        model = tmp_path / "model.json"
        code, out, _ = run_cli(capsys, "classify-train", "--train", str(train),
                               "--out", str(model), "--k-cov", "6")
        assert code == 0
        assert model.exists()
        code, out, err = run_cli(capsys, "classify-predict", "--model",
                                 str(model), "--test", str(test))
        assert code == 0
        rows = parse_csv(out)
        assert [r["predicted"] for r in rows] == ["A", "B"]
        assert "pcc: 100" in err

    def test_explicit_slope_skips_tuning(self, capsys, tmp_path):
        train = tmp_path / "train.csv"
        train.write_text("f1,pkc\n0,A\n0.1,A\n0.2,A\n10,B\n10.1,B\n10.2,B\n")
        model = tmp_path / "model.json"
        code, out, _ = run_cli(capsys, "classify-train", "--train", str(train),
                               "--out", str(model), "--a", "0.7", "--k-cov", "3")
        assert code == 0
        assert json.loads(model.read_text())["config"]["a"] == 0.7
        rows = {r["key"]: r["value"] for r in parse_csv(out)}
        assert rows["a"] == "0.7"


class TestIr:
    @pytest.fixture
    def graph_file(self, tmp_path):
        doc = {"docs": [{"id": f"D{i}", "rank": i} for i in range(1, 7)],
               "links": [["D1", "D2"], ["D1", "D6"], ["D4", "D3"],
                         ["D3", "D5"], ["D5", "D4"]]}
        p = tmp_path / "graph.json"
        p.write_text(json.dumps(doc))
        return str(p)

    def test_ranking_columns_and_order(self, capsys, graph_file):
        code, out, _ = run_cli(capsys, "ir", graph_file)
        assert code == 0
        rows = parse_csv(out)
        assert list(rows[0]) == ["id", "rank", "alpha", "support"]
        supports = [float(r["support"]) for r in rows]
        assert supports == sorted(supports, reverse=True)
        assert rows[0]["id"] == "D1"

    def test_target_pretty_prints_arguments(self, capsys, graph_file):
        code, out, _ = run_cli(capsys, "--format", "pretty", "ir", graph_file,
                               "--target", "D6")
        assert code == 0
        assert "support(D6) = a(D6) | a(D1)&I(D1->D6)" in out

    def test_lambda_flag_changes_support(self, capsys, graph_file):
        _, out1, _ = run_cli(capsys, "ir", graph_file)
        _, out2, _ = run_cli(capsys, "ir", graph_file, "--lambda", "0.9")
        d6_1 = [r for r in parse_csv(out1) if r["id"] == "D6"][0]
        d6_2 = [r for r in parse_csv(out2) if r["id"] == "D6"][0]
        assert float(d6_2["support"]) > float(d6_1["support"])


class TestExperiment:
    def test_small_run_layout(self, capsys):
        code, out, _ = run_cli(capsys, "experiment", "--case", "5",
                               "--reps", "2")
        assert code == 0
        rows = parse_csv(out)
        assert [r["rep"] for r in rows] == ["0", "1", "mean"]
        for row in rows:
            assert 0.0 <= float(row["tbm_pcc"]) <= 100.0

    def test_seed_changes_rows(self, capsys):
        _, out1, _ = run_cli(capsys, "--seed", "1", "experiment",
                             "--case", "5", "--reps", "1")
        _, out2, _ = run_cli(capsys, "--seed", "2", "experiment",
                             "--case", "5", "--reps", "1")
        assert out1 != out2

    def test_seed_reproducibility(self, capsys):
        _, out1, _ = run_cli(capsys, "--seed", "3", "experiment",
                             "--case", "5", "--reps", "1")
        _, out2, _ = run_cli(capsys, "--seed", "3", "experiment",
                             "--case", "5", "--reps", "1")
        assert out1 == out2
