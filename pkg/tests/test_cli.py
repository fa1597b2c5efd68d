import json

import numpy as np
import pytest

from dyadscore.cli import main
from dyadscore.decode import PosteriorMatrix
from dyadscore.io_formats import read_rttm, write_posteriors, write_rttm
from dyadscore.timeline import CHILD, Segment, Timeline


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestScore:
    def test_perfect_hypothesis_prints_zero_der(self, tmp_path, capsys):
        t = Timeline([Segment(0, 2, CHILD)], 5)
        ref = tmp_path / "ref.rttm"
        write_rttm(t, ref)
        code, out, _ = run(
            capsys, "score", "--ref", str(ref), "--hyp", str(ref),
            "--collar-ms", "100", "--duration", "5",
        )
        assert code == 0
        assert "DER  0.0" in out

    def test_anonymous_hyp_without_mapping_fails(self, tmp_path, capsys):
        ref = tmp_path / "ref.rttm"
        hyp = tmp_path / "hyp.rttm"
        write_rttm(Timeline([Segment(0, 2, CHILD)], 5), ref)
        hyp.write_text("SPEAKER s 1 0.000 2.000 <NA> <NA> spk0 <NA> <NA>\n")
        code, _, err = run(capsys, "score", "--ref", str(ref), "--hyp", str(hyp),
                           "--duration", "5")
        assert code == 2
        assert "map-speakers" in err

    def test_map_speakers_flag(self, tmp_path, capsys):
        ref = tmp_path / "ref.rttm"
        hyp = tmp_path / "hyp.rttm"
        write_rttm(Timeline([Segment(0, 2, CHILD)], 5), ref)
        hyp.write_text("SPEAKER s 1 0.000 2.000 <NA> <NA> spk0 <NA> <NA>\n")
        code, out, _ = run(
            capsys, "score", "--ref", str(ref), "--hyp", str(hyp),
            "--collar-ms", "0", "--duration", "5", "--map-speakers",
        )
        assert code == 0
        assert "DER  0.0" in out

    def test_missing_file_exits_2(self, tmp_path, capsys):
        code, _, err = run(capsys, "score", "--ref", "/no/such.rttm",
                           "--hyp", "/no/such.rttm")
        assert code == 2
        assert "error" in err


class TestDecode:
    def test_onehot_child_to_rttm(self, tmp_path, capsys):
        m = np.zeros((50, 4), dtype=np.float32)
        m[:, 0] = 1.0
        fpos = tmp_path / "p.fpos"
        write_posteriors(PosteriorMatrix(m, 20), fpos)
        out_rttm = tmp_path / "h.rttm"
        code, _, _ = run(capsys, "decode", "--posteriors", str(fpos),
                         "--out", str(out_rttm))
        assert code == 0
        lines = out_rttm.read_text().strip().splitlines()
        assert len(lines) == 1 and " CHI " in lines[0]


class TestTile:
    def test_inference_plan_listing(self, capsys):
        code, out, _ = run(capsys, "tile", "--duration", "65", "--window", "20")
        assert code == 0
        assert out.strip().splitlines()[-1] == "60.000\t65.000"


class TestSynth:
    def test_deterministic_outputs(self, tmp_path, capsys):
        d1, d2 = tmp_path / "a", tmp_path / "b"
        for d in (d1, d2):
            code, _, _ = run(
                capsys, "synth", "--out-dir", str(d), "--sessions", "2",
                "--duration", "120", "--seed", "7",
                "--child-mean", "20", "--adult-mean", "40",
            )
            assert code == 0
        for name in ("synth000.rttm", "synth000.fpos", "synth001.rttm"):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()
        # manifests differ only in paths
        m1 = (d1 / "manifest.jsonl").read_text().replace(str(d1), "")
        m2 = (d2 / "manifest.jsonl").read_text().replace(str(d2), "")
        assert m1 == m2

    def test_dyad_seed_env_default(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("DYAD_SEED", "99")
        d1 = tmp_path / "env"
        d2 = tmp_path / "flag"
        run(capsys, "synth", "--out-dir", str(d1), "--duration", "60",
            "--child-mean", "10", "--adult-mean", "20")
        run(capsys, "synth", "--out-dir", str(d2), "--duration", "60",
            "--child-mean", "10", "--adult-mean", "20", "--seed", "99")
        assert (d1 / "synth000.rttm").read_bytes() == (d2 / "synth000.rttm").read_bytes()


class TestSplitAndReport:
    @pytest.fixture
    def corpus_dir(self, tmp_path, capsys):
        d = tmp_path / "corpus"
        code, _, _ = run(
            capsys, "synth", "--out-dir", str(d), "--sessions", "6",
            "--duration", "120", "--seed", "3",
            "--child-mean", "20", "--adult-mean", "40", "--flip-p", "0.1",
        )
        assert code == 0
        return d

    def test_split_then_report(self, corpus_dir, tmp_path, capsys):
        splits = tmp_path / "splits.json"
        code, _, _ = run(
            capsys, "split", "--manifest", str(corpus_dir / "manifest.jsonl"),
            "--folds", "3", "--out", str(splits),
        )
        assert code == 0
        plan = json.loads(splits.read_text())
        assert len(plan["folds"]) == 3

        report = tmp_path / "rep"
        code, _, _ = run(
            capsys, "report", "--manifest", str(corpus_dir / "manifest.jsonl"),
            "--splits", str(splits), "--collar-ms", "0", "--out", str(report),
        )
        assert code == 0
        data = json.loads((tmp_path / "rep.json").read_text())
        assert data["protocol"] == "baseline"
        assert data["aggregate"]["der"] > 0
        assert (tmp_path / "rep.txt").read_text().startswith("protocol:")

    def test_ablate(self, corpus_dir, tmp_path, capsys):
        report = tmp_path / "abl"
        code, _, _ = run(
            capsys, "ablate", "--manifest", str(corpus_dir / "manifest.jsonl"),
            "--collar-ms", "0", "--out", str(report), "--seed", "1",
        )
        assert code == 0
        data = json.loads((tmp_path / "abl.json").read_text())
        assert set(data["der_curves"]) == {"by-session", "by-duration"}


class TestUsage:
    def test_unknown_flag_exits_2(self, capsys):
        code, _, err = run(capsys, "tile", "--bogus")
        assert code == 2
        assert "usage" in err

    def test_no_command_exits_2(self, capsys):
        assert run(capsys, )[0] == 2
