"""Motion containers and root-coordinate conversions.

A sequence stores one pose per row. The root block is interpreted per the
convention flag:

* ``RELATIVE_ROOT``: column 0 holds the heading change to the next frame,
  columns 1-2 the planar displacement to the next frame (expressed in the
  current facing frame under the canonical mode), column 3 the absolute root
  height. The last valid frame has no successor, so its delta channels are
  zero.
* ``GLOBAL_ROOT``: column 0 holds the absolute world heading, columns 1-2 the
  absolute planar position, column 3 the height.

World frame is y-up right-handed; headings are radians; positions meters.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .layout import (FeatureLayout, COL_ROOT_ROT, COL_ROOT_X, COL_ROOT_Z,
                     COL_ROOT_HEIGHT)
from .skeleton import SkeletonSpec

STD_FLOOR = 1e-8


class Convention(enum.Enum):
    RELATIVE_ROOT = 0
    GLOBAL_ROOT = 1


class ConventionError(ValueError):
    pass


@dataclass(frozen=True)
class MotionSequence:
    data: np.ndarray  # [N, F] float32
    fps: float
    valid_length: int
    convention: Convention
    layout: FeatureLayout

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float32)
        object.__setattr__(self, "data", d)
        if d.ndim != 2 or d.shape[1] != self.layout.total_width:
            raise ValueError(f"expected [N, {self.layout.total_width}] data, got {d.shape}")
        if not 1 <= self.valid_length <= d.shape[0]:
            raise ValueError("valid_length out of range")
        if not np.isfinite(d).all():
            raise ValueError("motion contains non-finite entries")
        if d.shape[0] > self.valid_length and np.any(d[self.valid_length:]):
            raise ValueError("padding rows must be zero")

    @property
    def num_frames(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def with_data(self, data: np.ndarray, convention: Convention | None = None) -> "MotionSequence":
        return replace(self, data=data,
                       convention=self.convention if convention is None else convention)


@dataclass(frozen=True)
class NormalizationStats:
    mean: np.ndarray  # [F]
    std: np.ndarray   # [F], floored at STD_FLOOR

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float32)
        std = np.asarray(self.std, dtype=np.float32)
        if mean.shape != std.shape or mean.ndim != 1:
            raise ValueError("mean/std widths disagree")
        if np.any(std < STD_FLOOR):
            raise ValueError(f"std below floor {STD_FLOOR}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @classmethod
    def from_frames(cls, frames: np.ndarray) -> "NormalizationStats":
        """Fit per-column stats over the given (valid) frames only."""
        mean = frames.mean(axis=0)
        std = np.maximum(frames.std(axis=0), STD_FLOOR)
        return cls(mean=mean, std=std)


def heading_rotation(theta: np.ndarray) -> np.ndarray:
    """Planar rotation by heading about +y, as a [..., 2, 2] matrix on (x, z)."""
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)


def _require(seq: MotionSequence, convention: Convention):
    if seq.convention is not convention:
        raise ConventionError(
            f"expected {convention.name} sequence, got {seq.convention.name}")


def relative_to_global(seq: MotionSequence, mode: str = "canonical") -> MotionSequence:
    """Accumulate per-frame root deltas into absolute heading and position.

    Heading at frame i is the sum of the heading deltas of all frames before
    it; the planar displacement of frame k is rotated from the facing frame
    into world coordinates by the heading at frame k before summing
    (``mode="naive_sum"`` skips the rotation). Frame 0 lands at the origin
    with heading 0.
    """
    _require(seq, Convention.RELATIVE_ROOT)
    if mode not in ("canonical", "naive_sum"):
        raise ValueError(f"unknown conversion mode {mode!r}")
    n = seq.valid_length
    out = seq.data.copy()
    rot_vel = seq.data[:n, COL_ROOT_ROT].astype(np.float64)
    dxz = seq.data[:n, COL_ROOT_X:COL_ROOT_Z + 1].astype(np.float64)

    theta = np.concatenate([[0.0], np.cumsum(rot_vel)[:-1]])
    if mode == "canonical":
        steps = np.einsum("nij,nj->ni", heading_rotation(theta), dxz)
    else:
        steps = dxz
    pos = np.concatenate([np.zeros((1, 2)), np.cumsum(steps, axis=0)[:-1]])

    out[:n, COL_ROOT_ROT] = theta
    out[:n, COL_ROOT_X:COL_ROOT_Z + 1] = pos
    return seq.with_data(out, Convention.GLOBAL_ROOT)


def global_to_relative(seq: MotionSequence, mode: str = "canonical") -> MotionSequence:
    """Inverse of :func:`relative_to_global`.

    Frame k receives the delta leading to frame k+1; the last valid frame's
    delta channels are zero (no successor frame).
    """
    _require(seq, Convention.GLOBAL_ROOT)
    if mode not in ("canonical", "naive_sum"):
        raise ValueError(f"unknown conversion mode {mode!r}")
    n = seq.valid_length
    out = seq.data.copy()
    theta = seq.data[:n, COL_ROOT_ROT].astype(np.float64)
    pos = seq.data[:n, COL_ROOT_X:COL_ROOT_Z + 1].astype(np.float64)

    rot_vel = np.zeros(n)
    dxz = np.zeros((n, 2))
    if n > 1:
        rot_vel[:-1] = np.diff(theta)
        world_steps = np.diff(pos, axis=0)
        if mode == "canonical":
            # transpose of the heading rotation undoes the facing-frame mapping
            inv = heading_rotation(theta[:-1]).transpose(0, 2, 1)
            dxz[:-1] = np.einsum("nij,nj->ni", inv, world_steps)
        else:
            dxz[:-1] = world_steps

    out[:n, COL_ROOT_ROT] = rot_vel
    out[:n, COL_ROOT_X:COL_ROOT_Z + 1] = dxz
    return seq.with_data(out, Convention.RELATIVE_ROOT)


def recover_joint_positions(seq: MotionSequence, skel: SkeletonSpec) -> np.ndarray:
    """World-space joint positions [N, J, 3] from a global-root sequence.

    Uses the stored local-position block: each non-root joint sits at the root
    position plus its local offset rotated by the world heading. Only valid
    frames are populated; padding rows stay zero.
    """
    _require(seq, Convention.GLOBAL_ROOT)
    layout = seq.layout
    if layout.skeleton.joint_count != skel.joint_count:
        raise ValueError("layout and skeleton joint counts disagree")
    n, J = seq.valid_length, skel.joint_count
    out = np.zeros((seq.num_frames, J, 3))

    theta = seq.data[:n, COL_ROOT_ROT].astype(np.float64)
    root = np.stack([seq.data[:n, COL_ROOT_X],
                     seq.data[:n, COL_ROOT_HEIGHT],
                     seq.data[:n, COL_ROOT_Z]], axis=-1).astype(np.float64)
    sl = layout.block_slices()["local_positions"]
    local = seq.data[:n, sl].astype(np.float64).reshape(n, J - 1, 3)

    rot = heading_rotation(theta)  # acts on (x, z)
    xz = np.einsum("nij,nkj->nki", rot, local[:, :, [0, 2]])
    world = np.empty_like(local)
    world[:, :, 0] = xz[:, :, 0]
    world[:, :, 1] = local[:, :, 1]
    world[:, :, 2] = xz[:, :, 1]

    out[:n, skel.root_joint_id] = root
    nonroot = [j for j in range(J) if j != skel.root_joint_id]
    out[:n, nonroot] = root[:, None, :] + world
    return out


def pad_or_trim(seq: MotionSequence, target_frames: int) -> MotionSequence:
    if target_frames < 1:
        raise ValueError("target length must be >= 1")
    N = seq.num_frames
    if target_frames == N:
        return seq
    if target_frames > N:
        pad = np.zeros((target_frames - N, seq.width), dtype=np.float32)
        data = np.concatenate([seq.data, pad])
        return replace(seq, data=data)
    data = seq.data[:target_frames].copy()
    valid = min(seq.valid_length, target_frames)
    return replace(seq, data=data, valid_length=valid)


def normalize(seq: MotionSequence, stats: NormalizationStats) -> MotionSequence:
    _check_width(seq, stats)
    data = (seq.data - stats.mean) / stats.std
    data[seq.valid_length:] = 0.0
    return seq.with_data(data)


def denormalize(seq: MotionSequence, stats: NormalizationStats) -> MotionSequence:
    _check_width(seq, stats)
    data = seq.data * stats.std + stats.mean
    data[seq.valid_length:] = 0.0
    return seq.with_data(data)


def denormalize_array(x: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    return x * stats.std + stats.mean


def normalize_array(x: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    return (x - stats.mean) / stats.std


def _check_width(seq: MotionSequence, stats: NormalizationStats):
    if stats.mean.shape[0] != seq.width:
        raise ValueError("stats width does not match sequence width")
