import json
import subprocess
import sys

import numpy as np
import pytest

from maxfilt.cli import main, parse_group_spec
import maxfilt as mf
from maxfilt.pipeline import write_pgm


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


class TestGroupSpecGrammar:
    def test_round_trips(self):
        assert parse_group_spec("cyclic:64") == mf.CyclicShift(64)
        assert parse_group_spec("perm:10") == mf.FullPermutation(10)
        assert parse_group_spec("signedperm:8") == mf.SignedPermutation(8)
        assert parse_group_spec("leftorth:2x50") == mf.LeftOrthogonal(2, 50)
        assert parse_group_spec("colperm:3x7") == mf.ColumnPermutation(3, 7)
        assert parse_group_spec("phase:4") == mf.PhaseCircle(4)
        assert parse_group_spec("shiftconj:50") == mf.ShiftAndConjugate(50)
        assert parse_group_spec("window:30x971", channels=15) == \
            mf.SlidingWindowShift(15, 30, 971)
        assert parse_group_spec("window:15x30x971") == mf.SlidingWindowShift(15, 30, 971)
        patch = parse_group_spec("patchperm:4@16x16")
        assert len(patch.patches) == 16 and len(patch.patches[0]) == 16

    def test_bad_specs_rejected(self):
        for bad in ("cyclic", "unknown:4", "window:30", "cyclic:x"):
            with pytest.raises(mf.ValidationError):
                parse_group_spec(bad)


class TestFilterCommand:
    def test_basic_filter(self, tmp_path, capsys):
        t = write_json(tmp_path / "t.json", [1.0, 0.0, 0.0, 0.0])
        x = write_json(tmp_path / "x.json", [0.0, 0.0, 5.0, 0.0])
        code, out, _ = run_cli(capsys, "filter", "--group", "cyclic:4",
                               "--template", t, "--input", x)
        assert code == 0
        doc = json.loads(out)
        assert doc["value"] == pytest.approx(5.0)
        assert doc["witnesses"] == [2]

    def test_oracle_flag_agrees(self, tmp_path, capsys):
        t = write_json(tmp_path / "t.json", [0.3, -1.0, 0.4])
        x = write_json(tmp_path / "x.json", [1.0, 2.0, -0.5])
        code, out, _ = run_cli(capsys, "filter", "--group", "perm:3",
                               "--template", t, "--input", x, "--oracle")
        assert code == 0

    def test_dimension_mismatch_exits_3(self, tmp_path, capsys):
        t = write_json(tmp_path / "t.json", [1.0, 0.0])
        x = write_json(tmp_path / "x.json", [1.0, 0.0, 0.0])
        code, _, err = run_cli(capsys, "filter", "--group", "cyclic:3",
                               "--template", t, "--input", x)
        assert code == 3
        assert "validation" in err

    def test_missing_file_exits_2(self, tmp_path, capsys):
        x = write_json(tmp_path / "x.json", [1.0, 0.0, 0.0])
        code, _, err = run_cli(capsys, "filter", "--group", "cyclic:3",
                               "--template", str(tmp_path / "nope.json"), "--input", x)
        assert code == 2

    def test_malformed_json_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        x = write_json(tmp_path / "x.json", [1.0, 0.0, 0.0])
        code, _, _ = run_cli(capsys, "filter", "--group", "cyclic:3",
                             "--template", str(bad), "--input", x)
        assert code == 2

    def test_oracle_mismatch_exits_4(self, tmp_path, capsys, monkeypatch):
        import maxfilt.cli as cli_mod
        from maxfilt.core import FilterResult

        monkeypatch.setattr(cli_mod, "brute_force_max_filter",
                            lambda g, z, x: FilterResult(value=123.0, witnesses=[0]))
        t = write_json(tmp_path / "t.json", [1.0, 0.0])
        x = write_json(tmp_path / "x.json", [0.0, 1.0])
        code, _, err = run_cli(capsys, "filter", "--group", "cyclic:2",
                               "--template", t, "--input", x, "--oracle")
        assert code == 4
        assert "oracle" in err

    def test_enumerated_group_from_file(self, tmp_path, capsys):
        mats = write_json(tmp_path / "group.json",
                          [[[1, 0], [0, 1]], [[-1, 0], [0, -1]]])
        t = write_json(tmp_path / "t.json", [1.0, 0.0])
        x = write_json(tmp_path / "x.json", [-2.0, 5.0])
        code, out, _ = run_cli(capsys, "filter", "--group", f"enumerated:{mats}",
                               "--template", t, "--input", x)
        assert code == 0
        assert json.loads(out)["value"] == pytest.approx(2.0)

    def test_complex_group_operands(self, tmp_path, capsys):
        t = write_json(tmp_path / "t.json", [[1.0, 0.0], [0.0, 0.0]])
        x = write_json(tmp_path / "x.json", [[0.0, 1.0], [0.0, 0.0]])
        code, out, _ = run_cli(capsys, "filter", "--group", "phase:2",
                               "--template", t, "--input", x)
        assert code == 0
        assert json.loads(out)["value"] == pytest.approx(1.0)


class TestTemplatesCommand:
    def test_hermite_template(self, tmp_path, capsys):
        code, out, _ = run_cli(capsys, "templates", "--hermite", "3", "--dim", "16")
        assert code == 0
        vec = np.array(json.loads(out)["template"]["vector"])
        # odd degree: antisymmetric across the quantile grid
        np.testing.assert_allclose(vec, -vec[::-1], atol=1e-12)
        # separate --degree spelling produces the identical template
        code, out2, _ = run_cli(capsys, "templates", "--hermite", "--degree", "3",
                                "--dim", "16")
        assert code == 0
        np.testing.assert_array_equal(
            np.array(json.loads(out2)["template"]["vector"]), vec)

    def test_sphere_templates_deterministic(self, capsys):
        code1, out1, _ = run_cli(capsys, "templates", "--sphere", "3", "--dim", "5",
                                 "--seed", "9")
        code2, out2, _ = run_cli(capsys, "templates", "--sphere", "3", "--dim", "5",
                                 "--seed", "9")
        assert code1 == code2 == 0
        d1, d2 = json.loads(out1), json.loads(out2)
        d1.pop("timestamp"), d2.pop("timestamp")
        assert d1 == d2


class TestGraphFilterCommand:
    def test_path_template_separates(self, tmp_path, capsys):
        from maxfilt.graphs import TreeTemplate, WeightedGraph
        tree = write_json(tmp_path / "p4.json", TreeTemplate.path(4).to_dict())
        hexagon = write_json(tmp_path / "c6.json", WeightedGraph.cycle(6).to_dict())
        double = write_json(tmp_path / "cc.json", WeightedGraph.disjoint_union(
            WeightedGraph.cycle(3), WeightedGraph.cycle(3)).to_dict())
        code, out, _ = run_cli(capsys, "graph-filter", "--tree", tree,
                               "--graph", hexagon, "--seed", "7", "--oracle")
        assert code == 0
        v_hex = json.loads(out)["value"]
        code, out, _ = run_cli(capsys, "graph-filter", "--tree", tree,
                               "--graph", double, "--seed", "7", "--oracle")
        assert code == 0
        v_two = json.loads(out)["value"]
        assert v_hex == pytest.approx(6.0)
        assert v_two == pytest.approx(4.0)
        assert v_hex != v_two


class TestAnalysisCommands:
    def test_separation_zero_violations(self, capsys):
        code, out, _ = run_cli(capsys, "separation", "--group", "cyclic:4",
                               "--n", "8", "--trials", "300", "--seed", "1")
        assert code == 0
        doc = json.loads(out)
        assert doc["violations"] == 0
        assert doc["seed"] == 1
        assert "config_hash" in doc and "version" in doc

    def test_lipschitz_report(self, capsys):
        code, out, _ = run_cli(capsys, "lipschitz", "--group", "signflips:3",
                               "--n", "10", "--samples", "100", "--seed", "2")
        assert code == 0
        doc = json.loads(out)
        assert 0 < doc["lower_est"] <= doc["upper_est"] <= doc["theory_upper"] + 1e-6

    def test_stability_sweep(self, capsys):
        code, out, _ = run_cli(capsys, "stability", "--grid", "64", "--warps", "5",
                               "--modes", "2", "--seed", "3")
        assert code == 0
        doc = json.loads(out)
        assert len(doc["reports"]) == 5

    def test_table_format(self, capsys):
        code, out, _ = run_cli(capsys, "separation", "--group", "cyclic:4",
                               "--n", "4", "--trials", "50", "--seed", "4",
                               "--format", "table")
        assert code == 0
        assert "violations" in out and "{" not in out.splitlines()[0]


class TestDeterminism:
    def test_byte_identical_reports_modulo_timestamp(self, tmp_path, capsys):
        args = ["separation", "--group", "perm:4", "--n", "8", "--trials", "200",
                "--seed", "11"]
        blobs = []
        for rep in ("a.json", "b.json"):
            path = tmp_path / rep
            code, _, _ = run_cli(capsys, *args, "--output", str(path))
            assert code == 0
            doc = json.loads(path.read_text())
            assert doc.pop("timestamp")
            blobs.append(json.dumps(doc, sort_keys=True))
        assert blobs[0] == blobs[1]


class TestTrainPredict:
    def _write_ecg(self, tmp_path, rng, label, name, motif, t=24, c=2, w=6):
        mat = 0.1 * rng.standard_normal((c, t))
        pos = int(rng.integers(t - w))
        mat[:, pos:pos + w] += motif
        np.savetxt(str(tmp_path / name), mat, delimiter=",")
        return {"path": name, "label": label}

    def test_train_then_predict(self, tmp_path, capsys):
        rng = np.random.default_rng(5)
        motif_a = rng.standard_normal((2, 6))
        motif_b = rng.standard_normal((2, 6))
        entries = []
        for i in range(10):
            entries.append(self._write_ecg(tmp_path, rng, "mi", f"a{i}.csv", motif_a))
            entries.append(self._write_ecg(tmp_path, rng, "ok", f"b{i}.csv", motif_b))
        manifest = write_json(tmp_path / "manifest.json", {"samples": entries})
        model_path = str(tmp_path / "model.json")
        code, out, err = run_cli(capsys, "train", "--data", manifest,
                                 "--data-format", "ecg_csv",
                                 "--group", "window:6x19",
                                 "--templates", "2", "--epochs", "30",
                                 "--seed", "6", "--output", model_path)
        assert code == 0, err
        doc = json.loads(out)
        assert doc["final_loss"] <= doc["initial_loss"]
        code, out, err = run_cli(capsys, "predict", "--model", model_path,
                                 "--input", str(tmp_path / "a0.csv"))
        assert code == 0, err
        assert json.loads(out)["label"] in ("mi", "ok")


class TestDistrictCommand:
    def test_csv_emission(self, tmp_path, capsys):
        polys = [
            {"label": "square", "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]},
            {"label": "flag", "vertices": [[0, 0], [4, 0], [4, 0.5], [0, 0.5]]},
            {"label": "tri", "vertices": [[0, 0], [2, 0], [1, 1.5]]},
        ]
        src = write_json(tmp_path / "polys.json", polys)
        out_csv = tmp_path / "coords.csv"
        code, _, err = run_cli(capsys, "district", "--polygons", src,
                               "--samples", "16", "--templates", "20",
                               "--pca", "2", "--seed", "8",
                               "--output", str(out_csv))
        assert code == 0, err
        rows = out_csv.read_text().strip().splitlines()
        assert rows[0] == "label,pc1,pc2"
        assert len(rows) == 4


class TestTextureCommand:
    def test_extract_and_train(self, tmp_path, capsys):
        sys.path.insert(0, "tests")
        from test_pipeline import make_texture_field
        rng = np.random.default_rng(9)
        entries = []
        for smooth, lab in ((0.0, "rough"), (1.5, "smooth")):
            for i in range(4):
                name = f"{lab}{i}.pgm"
                write_pgm(str(tmp_path / name), make_texture_field(16, smooth, rng))
                entries.append({"path": name, "label": lab})
        manifest = write_json(tmp_path / "m.json", {"samples": entries})
        model_path = str(tmp_path / "texture-model.json")
        code, out, err = run_cli(capsys, "texture", "--manifest", manifest,
                                 "--levels", "2:3", "--degrees", "0:3",
                                 "--pca", "25", "--seed", "10",
                                 "--output", model_path)
        assert code == 0, err
        assert json.loads(out)["train_accuracy"] >= 0.75
        code, out, _ = run_cli(capsys, "texture", "--extract",
                               "--image", str(tmp_path / "rough0.pgm"),
                               "--levels", "2:3", "--degrees", "0:2", "--seed", "0")
        assert code == 0
        assert len(json.loads(out)["features"]) == 6
        code, out, _ = run_cli(capsys, "predict", "--model", model_path,
                               "--input", str(tmp_path / "smooth1.pgm"))
        assert code == 0
        assert json.loads(out)["label"] in ("rough", "smooth")


class TestConsoleScript:
    def test_entry_point_runs(self, tmp_path):
        t = tmp_path / "t.json"
        t.write_text("[1.0, 0.0]")
        x = tmp_path / "x.json"
        x.write_text("[0.0, 3.0]")
        proc = subprocess.run(
            [sys.executable, "-m", "maxfilt.cli", "filter", "--group", "cyclic:2",
             "--template", str(t), "--input", str(x)],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["value"] == pytest.approx(3.0)
