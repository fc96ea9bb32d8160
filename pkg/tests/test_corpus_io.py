import json

import numpy as np
import pytest

from condmdi.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from condmdi.corpus import (IngestError, ingest_corpus, synth_clip,
                            synth_corpus, to_training_examples)
from condmdi.evaluation import CONTACT_HEIGHT_M
from condmdi.motion import (Convention, recover_joint_positions,
                            relative_to_global)
from condmdi.mseq import (MseqFormatError, mseq_bytes, read_mseq, read_sidecar,
                          write_mseq, write_sidecar)

from conftest import random_relative


class TestMseqFormat:
    def test_write_read_byte_identical(self, layout, tmp_path):
        rng = np.random.default_rng(0)
        seq = random_relative(layout, rng, num_frames=20, valid=17)
        path = tmp_path / "clip.mseq"
        write_mseq(path, seq)
        loaded = read_mseq(path, layout)
        assert loaded.fps == seq.fps
        assert loaded.valid_length == 17
        assert loaded.convention is Convention.RELATIVE_ROOT
        np.testing.assert_array_equal(loaded.data, seq.data)
        # re-serialization reproduces the exact bytes
        assert mseq_bytes(loaded) == path.read_bytes()

    def test_sidecar_round_trip(self, layout, tmp_path):
        rng = np.random.default_rng(1)
        seq = random_relative(layout, rng, num_frames=8)
        path = tmp_path / "clip.mseq"
        write_mseq(path, seq)
        write_sidecar(path, "a person waves", "humanoid22")
        meta = read_sidecar(path)
        assert meta == {"prompt": "a person waves", "skeleton": "humanoid22"}

    @pytest.mark.parametrize("corrupt", ["magic", "version", "short", "width"])
    def test_malformed_files_rejected(self, layout, tmp_path, corrupt):
        rng = np.random.default_rng(2)
        seq = random_relative(layout, rng, num_frames=4)
        path = tmp_path / "bad.mseq"
        blob = bytearray(mseq_bytes(seq))
        if corrupt == "magic":
            blob[:4] = b"XSEQ"
        elif corrupt == "version":
            blob[4] = 9
        elif corrupt == "short":
            blob = blob[:-10]
        elif corrupt == "width":
            blob[12] = 8  # lies about F
        path.write_bytes(bytes(blob))
        with pytest.raises(MseqFormatError):
            read_mseq(path, layout)


class TestSynthCorpus:
    def test_seeded_byte_identical(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        synth_corpus(a, count=4, seed=13, num_frames=24, min_valid=16)
        synth_corpus(b, count=4, seed=13, num_frames=24, min_valid=16)
        for pa, pb in zip(sorted(a.glob("*.mseq")), sorted(b.glob("*.mseq"))):
            assert pa.read_bytes() == pb.read_bytes()

    def test_figure_eight_passes_origin_twice_per_period(self, layout):
        rng = np.random.default_rng(3)
        # long enough clip to cover one full lap at any sampled period
        seq, _ = synth_clip("figure-eight", layout, 160, 160, 20.0, rng)
        xz = seq.data[:160, 1:3].astype(np.float64)
        r = np.linalg.norm(xz, axis=1)
        near = (r < 0.05).astype(int)
        entries = np.flatnonzero(np.diff(near) == 1)
        # estimate the period from the curve itself: distance between origin visits
        assert near[0] == 1  # starts at the origin
        visits = 1 + len(entries)
        assert visits >= 2

    def test_contacts_consistent_with_height_rule(self, layout):
        rng = np.random.default_rng(4)
        seq, _ = synth_clip("sine-walk", layout, 48, 48, 20.0, rng)
        pos = recover_joint_positions(seq, layout.skeleton)
        sl = layout.block_slices()["foot_contacts"]
        contacts = seq.data[:48, sl]
        for i, j in enumerate(layout.contact_joint_ids):
            expected = (pos[:48, j, 1] < CONTACT_HEIGHT_M).astype(np.float32)
            np.testing.assert_array_equal(contacts[:, i], expected)

    def test_prompts_are_templated(self, tmp_path):
        synth_corpus(tmp_path, count=3, seed=5, num_frames=24, min_valid=16)
        prompts = [read_sidecar(p)["prompt"] for p in sorted(tmp_path.glob("*.mseq"))]
        assert any("sine" in p for p in prompts)
        assert all(p for p in prompts)


class TestIngest:
    def test_empty_directory_rejected_with_diagnosis(self, tmp_path):
        with pytest.raises(IngestError, match="0 .mseq"):
            ingest_corpus(tmp_path)

    def test_stats_match_direct_oracle(self, layout, tmp_path):
        synth_corpus(tmp_path, count=6, seed=7, num_frames=24, min_valid=16)
        manifest = ingest_corpus(tmp_path, layout)
        frames = []
        for p in sorted(tmp_path.glob("*.mseq")):
            seq = relative_to_global(read_mseq(p, layout))
            frames.append(seq.data[:seq.valid_length])
        frames = np.concatenate(frames)
        np.testing.assert_allclose(manifest.stats.mean, frames.mean(0), atol=1e-6)
        np.testing.assert_allclose(manifest.stats.std,
                                   np.maximum(frames.std(0), 1e-8), atol=1e-6)

    def test_short_clip_padded_on_demand(self, layout, tmp_path):
        rng = np.random.default_rng(8)
        seq = random_relative(layout, rng, num_frames=39)
        write_mseq(tmp_path / "c.mseq", seq)
        write_sidecar(tmp_path / "c.mseq", "p", "humanoid22")
        manifest = ingest_corpus(tmp_path, layout)
        ex = to_training_examples(manifest, 196)
        assert ex[0].features.shape == (196, layout.total_width)
        assert ex[0].valid_length == 39
        assert not np.any(ex[0].features[39:])

    def test_partial_ingest_rejected(self, layout, tmp_path):
        rng = np.random.default_rng(9)
        write_mseq(tmp_path / "good.mseq", random_relative(layout, rng, num_frames=8))
        (tmp_path / "bad.mseq").write_bytes(b"garbage")
        with pytest.raises(IngestError, match="bad.mseq"):
            ingest_corpus(tmp_path, layout)

    def test_npy_layout_supported(self, layout, tmp_path):
        rng = np.random.default_rng(10)
        feats = rng.normal(0, 0.3, (12, layout.total_width)).astype(np.float32)
        feats[-1, 0:3] = 0
        np.save(tmp_path / "m0.npy", feats)
        (tmp_path / "texts").mkdir()
        (tmp_path / "texts" / "m0.txt").write_text("a person crouches")
        manifest = ingest_corpus(tmp_path, layout)
        assert manifest.entries[0].prompt == "a person crouches"
        assert manifest.sequences[0].convention is Convention.GLOBAL_ROOT


class TestCheckpoint:
    def test_round_trip(self, tiny_checkpoint, tmp_path):
        path = tmp_path / "ck.npz"
        save_checkpoint(path, tiny_checkpoint.state, tiny_checkpoint.schedule,
                        tiny_checkpoint.layout, tiny_checkpoint.stats,
                        tiny_checkpoint.fps)
        loaded = load_checkpoint(path)
        assert loaded.state.step == tiny_checkpoint.state.step
        for k, v in tiny_checkpoint.state.model.state_dict().items():
            np.testing.assert_array_equal(loaded.state.model.state_dict()[k].numpy(),
                                          v.numpy())
        for k, v in tiny_checkpoint.state.ema.items():
            np.testing.assert_array_equal(loaded.state.ema[k].numpy(), v.numpy())
        np.testing.assert_array_equal(loaded.stats.mean, tiny_checkpoint.stats.mean)

    def test_digest_mismatch_rejected(self, tiny_checkpoint, tmp_path):
        path = tmp_path / "ck.npz"
        save_checkpoint(path, tiny_checkpoint.state, tiny_checkpoint.schedule,
                        tiny_checkpoint.layout, tiny_checkpoint.stats,
                        tiny_checkpoint.fps)
        # tamper with the manifest's schedule digest
        with np.load(path) as z:
            arrays = {k: z[k] for k in z.files}
        manifest = json.loads(bytes(arrays["__manifest__"]).decode())
        manifest["schedule_digest"] = "0" * 64
        arrays["__manifest__"] = np.frombuffer(
            json.dumps(manifest, sort_keys=True).encode(), dtype=np.uint8)
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)
        with pytest.raises(CheckpointError, match="digest"):
            load_checkpoint(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "nope.npz")
