"""MSEQ1 motion file format.

Little-endian header: magic ``MSEQ``, version u32 (=1), N u32, F u32, fps f32,
valid_length u32, convention u8; then N*F float32 row-major payload. An
optional UTF-8 JSON sidecar ``<name>.meta.json`` carries the text prompt and
skeleton name.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .layout import FeatureLayout
from .motion import Convention, MotionSequence

MAGIC = b"MSEQ"
VERSION = 1
_HEADER = struct.Struct("<4sIIIfIB")


class MseqFormatError(ValueError):
    pass


def mseq_bytes(seq: MotionSequence) -> bytes:
    data = np.ascontiguousarray(seq.data, dtype="<f4")
    header = _HEADER.pack(MAGIC, VERSION, seq.num_frames, seq.width,
                          seq.fps, seq.valid_length, seq.convention.value)
    return header + data.tobytes()


def write_mseq(path: str | Path, seq: MotionSequence) -> None:
    Path(path).write_bytes(mseq_bytes(seq))


def read_mseq(path: str | Path, layout: FeatureLayout) -> MotionSequence:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise MseqFormatError(f"{path}: truncated header")
    magic, version, n, f, fps, valid, conv = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise MseqFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise MseqFormatError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 4 * n * f
    if len(blob) != expected:
        raise MseqFormatError(f"{path}: payload size {len(blob)} != {expected}")
    if f != layout.total_width:
        raise MseqFormatError(f"{path}: width {f} != layout width {layout.total_width}")
    data = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(n, f)
    try:
        convention = Convention(conv)
    except ValueError:
        raise MseqFormatError(f"{path}: unknown convention byte {conv}") from None
    try:
        return MotionSequence(data=data.copy(), fps=fps, valid_length=valid,
                              convention=convention, layout=layout)
    except ValueError as e:
        raise MseqFormatError(f"{path}: {e}") from None


def sidecar_path(path: str | Path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".meta.json")


def write_sidecar(path: str | Path, prompt: str, skeleton: str) -> None:
    sidecar_path(path).write_text(
        json.dumps({"prompt": prompt, "skeleton": skeleton}, indent=2))


def read_sidecar(path: str | Path) -> dict:
    p = sidecar_path(path)
    if not p.exists():
        return {}
    return json.loads(p.read_text())
