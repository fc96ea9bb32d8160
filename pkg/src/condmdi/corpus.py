"""Dataset ingestion and the bundled synthetic clip generators.

A corpus directory holds ``.mseq`` files with JSON sidecars (or a recognized
export of ``.npy`` feature matrices with ``texts/<name>.txt`` prompts).
Ingestion loads every clip, converts root coordinates to the global form once,
computes normalization statistics over valid frames, and rejects the corpus if
any file fails to parse.

The synthetic generators produce deterministic parametric gait clips (sine
path, figure eight, forward jumps) with analytic root trajectories, phase-
driven limb swing, and contact channels derived from the recovered foot
heights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .layout import (FeatureLayout, COL_ROOT_ROT, COL_ROOT_X, COL_ROOT_Z,
                     COL_ROOT_HEIGHT, canonical_layout)
from .motion import (Convention, MotionSequence, NormalizationStats,
                     global_to_relative, pad_or_trim, recover_joint_positions,
                     relative_to_global)
from .mseq import read_mseq, read_sidecar, write_mseq, write_sidecar
from .skeleton import rest_local_positions
from .training import TrainingExample

SYNTH_KINDS = ("sine-walk", "figure-eight", "jump")


class IngestError(RuntimeError):
    pass


@dataclass
class ClipEntry:
    file: str
    prompt: str
    valid_length: int
    skeleton: str


@dataclass
class CorpusManifest:
    root: Path
    entries: list[ClipEntry]
    stats: NormalizationStats
    layout_digest: str
    sequences: list[MotionSequence]  # global-root, cached at ingest time

    def __len__(self) -> int:
        return len(self.entries)


def ingest_corpus(directory: str | Path, layout: FeatureLayout | None = None) -> CorpusManifest:
    layout = layout or canonical_layout()
    root = Path(directory)
    if not root.is_dir():
        raise IngestError(f"{root}: not a directory")
    mseq_files = sorted(root.glob("*.mseq"))
    npy_files = sorted(root.glob("*.npy"))
    if not mseq_files and not npy_files:
        raise IngestError(f"{root}: no clips found (0 .mseq / .npy files)")

    entries: list[ClipEntry] = []
    sequences: list[MotionSequence] = []
    failures: list[str] = []
    for path in mseq_files:
        try:
            seq = read_mseq(path, layout)
            meta = read_sidecar(path)
            prompt = meta.get("prompt", "")
            skel = meta.get("skeleton", layout.skeleton.name)
            if seq.convention is Convention.RELATIVE_ROOT:
                seq = relative_to_global(seq)
            sequences.append(seq)
            entries.append(ClipEntry(file=path.name, prompt=prompt,
                                     valid_length=seq.valid_length, skeleton=skel))
        except Exception as e:
            failures.append(f"{path}: {e}")
    for path in npy_files:
        try:
            data = np.load(path)
            if data.ndim != 2 or data.shape[1] != layout.total_width:
                raise IngestError(
                    f"expected [n, {layout.total_width}] features, got {data.shape}")
            seq = MotionSequence(data=data.astype(np.float32), fps=20.0,
                                 valid_length=data.shape[0],
                                 convention=Convention.RELATIVE_ROOT, layout=layout)
            txt = root / "texts" / (path.stem + ".txt")
            prompt = txt.read_text().strip() if txt.exists() else ""
            sequences.append(relative_to_global(seq))
            entries.append(ClipEntry(file=path.name, prompt=prompt,
                                     valid_length=seq.valid_length,
                                     skeleton=layout.skeleton.name))
        except Exception as e:
            failures.append(f"{path}: {e}")
    if failures:
        raise IngestError("corpus rejected, malformed files:\n" + "\n".join(failures))

    frames = np.concatenate([s.data[:s.valid_length] for s in sequences])
    stats = NormalizationStats.from_frames(frames)
    return CorpusManifest(root=root, entries=entries, stats=stats,
                          layout_digest=layout.digest(), sequences=sequences)


def to_training_examples(manifest: CorpusManifest, target_frames: int) -> list[TrainingExample]:
    """Pad/trim cached clips to a shared frame count and z-score them."""
    out = []
    stats = manifest.stats
    for seq, entry in zip(manifest.sequences, manifest.entries):
        seq = pad_or_trim(seq, target_frames)
        feats = ((seq.data - stats.mean) / stats.std).astype(np.float32)
        feats[seq.valid_length:] = 0.0
        out.append(TrainingExample(features=feats, prompt=entry.prompt,
                                   valid_length=seq.valid_length))
    return out


# --- synthetic clips -----------------------------------------------------

_PROMPTS = {
    "sine-walk": "a figure walking in a sine path",
    "figure-eight": "a person walks along a figure eight",
    "jump": "a person jumps forward repeatedly",
}
_SPEED_WORDS = ((0.8, "slowly"), (1.15, "steadily"), (10.0, "quickly"))


def synth_clip(kind: str, layout: FeatureLayout, num_frames: int,
               valid_length: int, fps: float,
               rng: np.random.Generator) -> tuple[MotionSequence, str]:
    """One deterministic parametric clip in global-root coordinates."""
    if kind not in SYNTH_KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}")
    skel = layout.skeleton
    n = valid_length
    F = layout.total_width
    data = np.zeros((num_frames, F), dtype=np.float64)
    tt = np.arange(n) / fps

    speed = rng.uniform(0.7, 1.4)          # m/s along the path
    stride_hz = rng.uniform(1.4, 2.0)      # steps per second
    height = rng.uniform(0.85, 0.95)
    phase0 = rng.uniform(0, 2 * math.pi)

    if kind == "sine-walk":
        amp = rng.uniform(0.3, 0.8)
        wave_hz = rng.uniform(0.15, 0.3)
        x = speed * tt
        z = amp * np.sin(2 * math.pi * wave_hz * tt)
        dz = amp * 2 * math.pi * wave_hz * np.cos(2 * math.pi * wave_hz * tt)
        heading = np.arctan2(-dz, speed)
        bob_amp, lift = 0.02, 0.08
    elif kind == "figure-eight":
        amp = rng.uniform(0.8, 1.6)
        period = rng.uniform(4.0, 7.0)  # seconds per lap
        u = 2 * math.pi * tt / period
        x = amp * np.sin(u)
        z = amp * np.sin(u) * np.cos(u)
        dx = np.gradient(x, tt) if n > 1 else np.zeros(1)
        dz = np.gradient(z, tt) if n > 1 else np.zeros(1)
        heading = np.arctan2(-dz, np.where(np.abs(dx) < 1e-9, 1e-9, dx))
        bob_amp, lift = 0.02, 0.08
    else:  # jump
        hop_hz = rng.uniform(0.8, 1.2)
        hop_len = rng.uniform(0.4, 0.8)
        x = hop_len * hop_hz * tt
        z = np.zeros(n)
        heading = np.zeros(n)
        bob_amp, lift = 0.0, 0.0

    stride_phase = 2 * math.pi * stride_hz * tt + phase0
    if kind == "jump":
        hop_phase = 2 * math.pi * hop_hz * tt + phase0
        root_h = height + 0.18 * np.maximum(0.0, np.sin(hop_phase))
        foot_clear = 0.18 * np.maximum(0.0, np.sin(hop_phase))
        left_h = right_h = foot_clear
        swing = np.zeros(n)
    else:
        root_h = height + bob_amp * np.sin(2 * stride_phase)
        left_h = lift * np.maximum(0.0, np.sin(stride_phase))
        right_h = lift * np.maximum(0.0, np.sin(stride_phase + math.pi))
        swing = (speed / (2 * math.pi * stride_hz)) * 1.5 * np.sin(stride_phase)

    data[:n, COL_ROOT_ROT] = heading
    data[:n, COL_ROOT_X] = x
    data[:n, COL_ROOT_Z] = z
    data[:n, COL_ROOT_HEIGHT] = root_h

    rest = rest_local_positions(skel)
    pos_block = np.zeros((n, skel.joint_count - 1, 3))
    nonroot = [j for j in range(skel.joint_count) if j != skel.root_joint_id]
    for slot, j in enumerate(nonroot):
        pos_block[:, slot, :] = rest[j]
    name = skel.joint_names

    def slot_of(joint: str) -> int:
        return nonroot.index(skel.joint_id(joint))

    # forward/backward leg swing with the feet pinned to the analytic heights
    for side, sign, foot_h in (("left", 1.0, left_h), ("right", -1.0, right_h)):
        for jn, gain in ((f"{side}_knee", 0.5), (f"{side}_ankle", 1.0),
                         (f"{side}_foot", 1.0)):
            s = slot_of(jn)
            pos_block[:, s, 0] = rest[skel.joint_id(jn)][0] + sign * gain * swing
        for jn in (f"{side}_ankle", f"{side}_foot"):
            s = slot_of(jn)
            pos_block[:, s, 1] = foot_h + rest[skel.joint_id(jn)][1] - rest[
                skel.joint_id(f"{side}_foot")][1] - root_h
    for side, sign in (("left", -1.0), ("right", 1.0)):
        for jn, gain in ((f"{side}_elbow", 0.6), (f"{side}_wrist", 1.0)):
            s = slot_of(jn)
            pos_block[:, s, 0] = rest[skel.joint_id(jn)][0] + sign * gain * 0.2 * swing

    sl = layout.block_slices()
    data[:n, sl["local_positions"]] = pos_block.reshape(n, -1)

    rot = np.zeros((n, skel.joint_count - 1, 6))
    rot[:, :, 0] = 1.0
    rot[:, :, 4] = 1.0
    rot[:, :, 1] = 0.1 * np.sin(stride_phase)[:, None]
    data[:n, sl["local_rotations"]] = rot.reshape(n, -1)

    # per-frame world displacement of each joint (zero on the last valid frame)
    seq_probe = MotionSequence(data=data.astype(np.float32), fps=fps,
                               valid_length=valid_length,
                               convention=Convention.GLOBAL_ROOT, layout=layout)
    world = recover_joint_positions(seq_probe, skel)[:n]
    vel = np.zeros((n, skel.joint_count, 3))
    if n > 1:
        vel[:-1] = np.diff(world, axis=0)
    data[:n, sl["velocities"]] = vel.reshape(n, -1)

    contacts = np.zeros((n, len(layout.contact_joint_ids)))
    for i, j in enumerate(layout.contact_joint_ids):
        contacts[:, i] = (world[:, j, 1] < 0.05).astype(np.float64)
    data[:n, sl["foot_contacts"]] = contacts

    seq = MotionSequence(data=data.astype(np.float32), fps=fps,
                         valid_length=valid_length,
                         convention=Convention.GLOBAL_ROOT, layout=layout)
    word = next(w for cap, w in _SPEED_WORDS if speed < cap)
    prompt = f"{_PROMPTS[kind]} {word}"
    return seq, prompt


def synth_corpus(out_dir: str | Path, kinds=SYNTH_KINDS, count: int = 60,
                 seed: int = 0, num_frames: int = 48, min_valid: int = 32,
                 fps: float = 20.0,
                 layout: FeatureLayout | None = None) -> list[Path]:
    """Write a deterministic corpus of parametric clips (stored relative-root)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    layout = layout or canonical_layout()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    min_valid = max(2, min(min_valid, num_frames))
    paths = []
    for i in range(count):
        kind = kinds[i % len(kinds)]
        valid = int(rng.integers(min_valid, num_frames + 1))
        seq, prompt = synth_clip(kind, layout, num_frames, valid, fps, rng)
        rel = global_to_relative(seq)
        path = out / f"{kind.replace('-', '_')}_{i:04d}.mseq"
        write_mseq(path, rel)
        write_sidecar(path, prompt, layout.skeleton.name)
        paths.append(path)
    return paths
