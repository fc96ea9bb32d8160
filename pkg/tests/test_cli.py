import json

import numpy as np
import pytest
from click.testing import CliRunner

from condmdi.checkpoint import save_checkpoint
from condmdi.cli import main
from condmdi.layout import canonical_layout
from condmdi.mseq import read_mseq
from condmdi.schedule import cosine_schedule

from conftest import random_relative


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def ckpt_path(tiny_checkpoint, tmp_path):
    path = tmp_path / "model.npz"
    save_checkpoint(path, tiny_checkpoint.state, tiny_checkpoint.schedule,
                    tiny_checkpoint.layout, tiny_checkpoint.stats,
                    tiny_checkpoint.fps)
    return path


class TestUsage:
    def test_no_args_prints_usage_exit_2(self, runner):
        result = runner.invoke(main, [])
        assert result.exit_code == 2
        assert "Usage" in result.output

    def test_unknown_flag_exit_2(self, runner):
        result = runner.invoke(main, ["schedule-dump", "--bogus"])
        assert result.exit_code == 2

    def test_version_prints_build_metadata(self, runner):
        result = runner.invoke(main, ["--version"])
        assert result.exit_code == 0
        assert "condmdi" in result.output


class TestScheduleDump:
    def test_row_count_matches_oracle(self, runner):
        result = runner.invoke(main, ["schedule-dump", "--t", "1000"])
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert len(lines) == 1001
        s = cosine_schedule(1000)
        t, beta, ab, sigma = lines[500].split(",")
        assert int(t) == 500
        assert float(beta) == s.beta[499]
        assert float(ab) == s.alpha_bar[500]
        assert float(sigma) == s.sigma[499]

    def test_invalid_steps_exit_1(self, runner):
        result = runner.invoke(main, ["schedule-dump", "--t", "0"])
        assert result.exit_code == 1


class TestConvert:
    def test_round_trip_within_tolerance(self, runner, layout, tmp_path):
        rng = np.random.default_rng(0)
        seq = random_relative(layout, rng, num_frames=20)
        src = tmp_path / "in.mseq"
        mid = tmp_path / "global.mseq"
        back = tmp_path / "rel.mseq"
        from condmdi.mseq import write_mseq
        write_mseq(src, seq)
        r1 = runner.invoke(main, ["convert", "--to", "global", str(src), str(mid)])
        assert r1.exit_code == 0, r1.output
        r2 = runner.invoke(main, ["convert", "--to", "relative", str(mid), str(back)])
        assert r2.exit_code == 0
        out = read_mseq(back, layout)
        assert np.abs(out.data - seq.data).max() < 1e-5

    def test_missing_file_exit_2(self, runner, tmp_path):
        result = runner.invoke(main, ["convert", "--to", "global",
                                      str(tmp_path / "nope.mseq"),
                                      str(tmp_path / "out.mseq")])
        assert result.exit_code == 2  # click validates the path


class TestSynthAndTrain:
    def test_synth_then_train_then_sample(self, runner, tmp_path, ckpt_path):
        corpus = tmp_path / "corpus"
        r = runner.invoke(main, ["synth", "--count", "6", "--seed", "2",
                                 "--frames", "16", "--out", str(corpus)])
        assert r.exit_code == 0, r.output
        assert len(list(corpus.glob("*.mseq"))) == 6

        out = tmp_path / "gen.mseq"
        r = runner.invoke(main, ["sample", "--ckpt", str(ckpt_path),
                                 "--prompt", "a person walks",
                                 "--seed", "4", "--length", "12",
                                 "--out", str(out)])
        assert r.exit_code == 0, r.output
        seq = read_mseq(out, canonical_layout())
        assert seq.valid_length == 12

    def test_sample_with_keyframes_file(self, runner, tmp_path, ckpt_path):
        kf = tmp_path / "kf.json"
        kf.write_text(json.dumps({"frames": [
            {"index": 2, "joints": ["root"],
             "values": {"root": [0.0, 0.5, 0.5, 0.9]}}]}))
        out = tmp_path / "gen.mseq"
        r = runner.invoke(main, ["sample", "--ckpt", str(ckpt_path),
                                 "--keyframes", str(kf), "--strategy", "cond",
                                 "--length", "12", "--out", str(out)])
        assert r.exit_code == 0, r.output

    def test_bad_keyframes_exit_1(self, runner, tmp_path, ckpt_path):
        kf = tmp_path / "kf.json"
        kf.write_text(json.dumps({"frames": [{"index": 500}]}))
        r = runner.invoke(main, ["sample", "--ckpt", str(ckpt_path),
                                 "--keyframes", str(kf),
                                 "--out", str(tmp_path / "x.mseq")])
        assert r.exit_code == 1

    def test_eval_writes_report(self, runner, tmp_path, ckpt_path,
                                tiny_corpus_dir):
        report = tmp_path / "report.json"
        r = runner.invoke(main, ["eval", "--ckpt", str(ckpt_path),
                                 "--data", str(tiny_corpus_dir),
                                 "--scheme", "randomK=2", "--strategy", "cond",
                                 "--limit", "4", "--seed", "1",
                                 "--report", str(report)])
        assert r.exit_code == 0, r.output
        body = json.loads(report.read_text())
        assert body["sample_count"] == 4
        assert np.isfinite(body["keyframe_error_m"])
