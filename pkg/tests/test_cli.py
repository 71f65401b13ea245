import json

import numpy as np
import pytest

from faceuniq.cli import main
from faceuniq.dataset import Dataset, load_binary, load_metadata, write_csv
from faceuniq.entropy import Image, write_pnm


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def sim(tmp_path, capsys):
    prefix = tmp_path / "pop"
    code, _, _ = run(capsys, "simulate", "--subjects", 10, "--samples", 10, "--dim", 16, "--seed", 42, "--out", prefix)
    assert code == 0
    return prefix


class TestScore:
    def test_summary_and_files(self, sim, tmp_path, capsys):
        code, out, _ = run(capsys, "score", f"{sim}.uemb", "--out", tmp_path / "r")
        assert code == 0
        fields = dict(line.split("\t", 1) for line in out.strip().splitlines())
        assert fields["subjects"] == "10" and fields["samples"] == "100" and fields["skipped"] == "0"
        doc = json.loads((tmp_path / "r.json").read_text())
        assert doc["u"] == pytest.approx(float(fields["u"]), abs=1e-6)
        assert doc["config"]["seed"] == 42 and doc["config"]["r"] == "auto"
        assert [s["r"] for s in doc["subjects"]] == [9] * 10
        assert [s["n"] for s in doc["subjects"]] == [12] * 10
        tsv = (tmp_path / "r.tsv").read_text().splitlines()
        assert tsv[0] == "subject_id\tdivergence\tgenuine_size\timpostor_size\tmin_impostor_id"
        assert len(tsv) == 11

    def test_deterministic(self, sim, tmp_path, capsys):
        run(capsys, "score", f"{sim}.uemb", "--seed", 42, "--out", tmp_path / "a")
        run(capsys, "score", f"{sim}.uemb", "--seed", 42, "--out", tmp_path / "a2", "--workers", 4)
        a = (tmp_path / "a.json").read_bytes()
        b = (tmp_path / "a2.json").read_bytes()
        assert a == b
        assert (tmp_path / "a.tsv").read_bytes() == (tmp_path / "a2.tsv").read_bytes()

    def test_env_seed(self, sim, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("FACEUNIQ_SEED", "7")
        run(capsys, "score", f"{sim}.uemb", "--out", tmp_path / "e")
        assert json.loads((tmp_path / "e.json").read_text())["seed"] == 7

    def test_one_subject(self, tmp_path, capsys):
        write_csv(Dataset([0, 0, 0], [0, 1, 2], [[0.0], [1.0], [2.0]]), tmp_path / "one.csv")
        code, _, err = run(capsys, "score", tmp_path / "one.csv", "--out", tmp_path / "r")
        assert code == 2
        assert "insufficient eligible subjects" in err

    def test_override_clamp_recorded(self, tmp_path, capsys):
        ds = Dataset([0] * 4 + [1] * 10, list(range(4)) + list(range(10)), np.arange(14.0)[:, None])
        write_csv(ds, tmp_path / "d.csv")
        assert run(capsys, "score", tmp_path / "d.csv", "--r", 5, "--n", 20, "--out", tmp_path / "r")[0] == 0
        doc = json.loads((tmp_path / "r.json").read_text())
        s0, s1 = doc["subjects"]
        assert (s0["r"], s0["n"], s0["r_clamped"]) == (3, 20, True)
        assert (s1["r"], s1["n"], s1["r_clamped"]) == (4, 20, True)
        assert doc["config"]["r"] == 5

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run(capsys, "score", tmp_path / "nope.uemb")
        assert code == 1 and err

    def test_garbage_file(self, tmp_path, capsys):
        (tmp_path / "g.bin").write_bytes(b"XEMB\x01")
        code, _, err = run(capsys, "score", tmp_path / "g.bin")
        assert code == 1 and "bad magic" in err


class TestScoreMin:
    def test_two_subjects(self, tmp_path, capsys):
        write_csv(Dataset([4, 4, 9, 9], [0, 1, 0, 1], [[0.0], [1.0], [5.0], [7.0]]), tmp_path / "d.csv")
        code, out, _ = run(capsys, "score-min", tmp_path / "d.csv", "--out", tmp_path / "r")
        assert code == 0 and "u_min" in out
        doc = json.loads((tmp_path / "r.json").read_text())
        assert doc["min_pair"] == {"4": 9, "9": 4}
        tsv = (tmp_path / "r.tsv").read_text().splitlines()
        assert [line.split("\t")[-1] for line in tsv[1:]] == ["9", "4"]

    def test_twin_population(self, tmp_path, capsys):
        run(capsys, "simulate", "--subjects", 20, "--samples", 10, "--dim", 32, "--twin-frac", 0.5,
            "--seed", 3, "--out", tmp_path / "tw")
        run(capsys, "score", tmp_path / "tw.uemb", "--min", "--out", tmp_path / "r")
        doc = json.loads((tmp_path / "r.json").read_text())
        assert abs(doc["u_min"] - 0.5) <= 0.02
        assert doc["u"] > 0.7

    def test_refuses_quadratic(self, tmp_path, capsys):
        n = 3000
        ds = Dataset(np.repeat(np.arange(n), 2), np.tile([0, 1], n), np.arange(2.0 * n)[:, None])
        write_csv(ds, tmp_path / "big.csv")
        code, _, err = run(capsys, "score-min", tmp_path / "big.csv", "--out", tmp_path / "r")
        assert code == 3
        assert "9.0e+06" in err and "--allow-quadratic" in err
        assert not (tmp_path / "r.json").exists()


class TestGroup:
    def test_gender(self, sim, tmp_path, capsys):
        code, out, _ = run(capsys, "group", f"{sim}.uemb", "--meta", f"{sim}_meta.csv", "--by", "gender",
                           "--out", tmp_path / "g")
        assert code == 0
        doc = json.loads((tmp_path / "g.json").read_text())
        assert [g["label"] for g in doc["groups"]] == ["F", "M"]
        assert all(g["usable"] and "report" in g for g in doc["groups"])
        assert doc["full"]["dataset"]["subjects"] == 10
        rows = (tmp_path / "g.tsv").read_text().splitlines()
        assert [r.split("\t")[0] for r in rows] == ["group", "full", "F", "M"]

    def test_age_single_subject_flagged(self, tmp_path, capsys):
        ds = Dataset(np.repeat([1, 2, 3], 3), np.tile([0, 1, 2], 3), np.arange(9.0)[:, None])
        write_csv(ds, tmp_path / "d.csv")
        (tmp_path / "m.csv").write_text("subject_id,gender,age\n1,F,34\n2,M,37\n3,F,52\n")
        code, out, _ = run(capsys, "group", tmp_path / "d.csv", "--meta", tmp_path / "m.csv", "--by", "age",
                           "--out", tmp_path / "g")
        assert code == 0
        groups = {g["label"]: g for g in json.loads((tmp_path / "g.json").read_text())["groups"]}
        assert groups["30-39"]["usable"] and not groups["50-59"]["usable"]
        assert "50-59\t1\t-\tunusable" in out

    def test_missing_ages(self, sim, tmp_path, capsys):
        code, _, err = run(capsys, "group", f"{sim}.uemb", "--by", "age", "--out", tmp_path / "g")
        assert code == 2 and "no age annotations" in err


class TestEntropy:
    @pytest.fixture
    def images(self, tmp_path):
        write_pnm(Image.from_array(np.full((4, 4), 9)), tmp_path / "const.pgm", binary=False)
        write_pnm(Image.from_array(np.arange(256).reshape(16, 16)), tmp_path / "uni.pgm")
        return tmp_path

    def test_listing(self, images, capsys):
        code, out, _ = run(capsys, "entropy", images / "const.pgm", images / "uni.pgm")
        assert code == 0
        lines = [line.split("\t") for line in out.strip().splitlines()]
        assert lines[1][3] == "0.0000" and lines[2][3] == "8.0000"
        assert lines[3][0] == "mean" and lines[3][3] == "4.0000"

    def test_identity_resize(self, images, capsys):
        _, out, _ = run(capsys, "entropy", images / "uni.pgm", "--resize", 16, 16)
        assert out.splitlines()[1].split("\t")[3] == "8.0000"

    def test_tsv_and_per_channel(self, images, capsys):
        code, out, _ = run(capsys, "entropy", images / "uni.pgm", "--per-channel", "--tsv", images / "h.tsv")
        assert code == 0 and (images / "h.tsv").read_text() == out
        assert out.splitlines()[1].split("\t")[4] == "8.0000"

    def test_partial_and_total_failure(self, images, capsys):
        (images / "bad.pbm").write_bytes(b"P4\n1 1\n\x00")
        code, out, err = run(capsys, "entropy", images / "bad.pbm", images / "const.pgm")
        assert code == 0 and "unsupported format" in err
        code, _, _ = run(capsys, "entropy", images / "bad.pbm")
        assert code == 1


class TestSimulate:
    def test_reload(self, tmp_path, capsys):
        args = ["simulate", "--subjects", 40, "--samples", 10, "--dim", 64, "--sep", 3.0,
                "--twin-frac", 0.5, "--seed", 7]
        code, out, _ = run(capsys, *args, "--out", tmp_path / "a")
        assert code == 0 and '"subjects": 40' in out
        ds = load_binary(tmp_path / "a.uemb")
        assert ds.n_subjects == 40 and ds.dimension == 64
        assert load_metadata(tmp_path / "a_meta.csv", ds).meta_for(1).gender == "M"
        run(capsys, *args, "--out", tmp_path / "b")
        assert (tmp_path / "a.uemb").read_bytes() == (tmp_path / "b.uemb").read_bytes()
        assert (tmp_path / "a_meta.csv").read_bytes() == (tmp_path / "b_meta.csv").read_bytes()

    def test_twin_frac_one_rejected(self, tmp_path, capsys):
        code, _, err = run(capsys, "simulate", "--subjects", 4, "--samples", 2, "--dim", 2,
                           "--twin-frac", 1.0, "--out", tmp_path / "x")
        assert code == 2 and "--twin-frac" in err
