"""Observation masks and keyframe signals.

An observation is a value matrix ``c`` paired with a binary mask ``m`` over
the same [N, F] grid; ``c`` is zero wherever the mask is zero. Mask schemes
cover the training-time random generator plus the fixed inference patterns
(evenly spaced frames, joint subsets, root trajectory, VR joints, explicit
frame/joint lists).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layout import FeatureLayout, ROOT_BLOCK_WIDTH


class MaskError(ValueError):
    pass


@dataclass(frozen=True)
class ObservationSpec:
    signal: np.ndarray  # [N, F] float32, zero outside the mask
    mask: np.ndarray    # [N, F] float32 in {0, 1}
    empty: bool = False

    def __post_init__(self):
        sig = np.asarray(self.signal, dtype=np.float32)
        m = np.asarray(self.mask, dtype=np.float32)
        if sig.shape != m.shape or sig.ndim != 2:
            raise MaskError(f"signal {sig.shape} and mask {m.shape} disagree")
        if not np.isin(m, (0.0, 1.0)).all():
            raise MaskError("mask entries must be 0 or 1")
        if np.any(sig * (1.0 - m)):
            raise MaskError("signal must be zero outside the mask")
        if self.empty and np.any(m):
            raise MaskError("empty observation must have an all-zero mask")
        object.__setattr__(self, "signal", sig)
        object.__setattr__(self, "mask", m)

    @classmethod
    def none(cls, n: int, width: int) -> "ObservationSpec":
        z = np.zeros((n, width), dtype=np.float32)
        return cls(signal=z, mask=z.copy(), empty=True)

    @classmethod
    def from_values(cls, values: np.ndarray, mask: np.ndarray) -> "ObservationSpec":
        mask = np.asarray(mask, dtype=np.float32)
        sig = np.asarray(values, dtype=np.float32) * mask
        return cls(signal=sig, mask=mask, empty=not np.any(mask))

    def observed_frames(self) -> np.ndarray:
        return np.flatnonzero(self.mask.any(axis=1))


@dataclass(frozen=True)
class MaskScheme:
    """Selector for one mask-generation strategy.

    ``kind`` is one of ``random_frames``, ``random_frames_and_joints``,
    ``every_t``, ``joint_subset``, ``root_trajectory``, ``vr_joints``,
    ``explicit``.
    """

    kind: str
    keyframe_count: tuple[int, int] | None = None  # inclusive range for k
    spacing: int | None = None
    joints: tuple[int, ...] | None = None
    explicit: tuple[tuple[int, tuple[int, ...]], ...] | None = None

    KINDS = ("random_frames", "random_frames_and_joints", "every_t",
             "joint_subset", "root_trajectory", "vr_joints", "explicit")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise MaskError(f"unknown mask scheme {self.kind!r}")
        if self.kind == "every_t" and (self.spacing is None or self.spacing < 1):
            raise MaskError("every_t needs spacing >= 1")
        if self.kind == "joint_subset" and not self.joints:
            raise MaskError("joint_subset needs a nonempty joint set")
        if self.keyframe_count is not None:
            lo, hi = self.keyframe_count
            if not 1 <= lo <= hi:
                raise MaskError("keyframe count range must satisfy 1 <= lo <= hi")

    @classmethod
    def random_frames(cls, count: int | tuple[int, int] | None = None) -> "MaskScheme":
        rng = (count, count) if isinstance(count, int) else count
        return cls(kind="random_frames", keyframe_count=rng)

    @classmethod
    def random_frames_and_joints(cls, count: int | tuple[int, int] | None = None) -> "MaskScheme":
        rng = (count, count) if isinstance(count, int) else count
        return cls(kind="random_frames_and_joints", keyframe_count=rng)

    @classmethod
    def every_t(cls, spacing: int) -> "MaskScheme":
        return cls(kind="every_t", spacing=spacing)

    @classmethod
    def joint_subset(cls, joints: tuple[int, ...]) -> "MaskScheme":
        return cls(kind="joint_subset", joints=tuple(joints))

    @classmethod
    def root_trajectory(cls) -> "MaskScheme":
        return cls(kind="root_trajectory")

    @classmethod
    def vr_joints(cls) -> "MaskScheme":
        return cls(kind="vr_joints")

    @classmethod
    def explicit_frames(cls, entries) -> "MaskScheme":
        return cls(kind="explicit",
                   explicit=tuple((int(f), tuple(js)) for f, js in entries))


def joints_to_columns(joints, layout: FeatureLayout) -> set[int]:
    """Feature columns observed for a joint subset (root channels always in)."""
    return layout.joint_columns(set(joints))


def generate_mask(scheme: MaskScheme, layout: FeatureLayout, num_frames: int,
                  valid_length: int, rng: np.random.Generator) -> np.ndarray:
    """Binary [N, F] mask for one sample; zero on padding rows.

    ``random_frames`` draws the keyframe count uniformly from
    [1, valid_length] (or the configured range) and then picks that many
    distinct frames uniformly; ``random_frames_and_joints`` additionally draws
    a joint-subset size uniformly from [1, J] and one joint subset shared by
    the sample's keyframes.
    """
    if valid_length < 1 or valid_length > num_frames:
        raise MaskError("valid_length out of range")
    F = layout.total_width
    J = layout.joint_count
    mask = np.zeros((num_frames, F), dtype=np.float32)

    if scheme.kind in ("random_frames", "random_frames_and_joints"):
        lo, hi = scheme.keyframe_count or (1, valid_length)
        hi = min(hi, valid_length)
        if lo > valid_length:
            raise MaskError(f"cannot place {lo} keyframes in {valid_length} frames")
        k = int(rng.integers(lo, hi + 1))
        frames = rng.choice(valid_length, size=k, replace=False)
        if scheme.kind == "random_frames":
            cols = sorted(layout.joint_columns(set(range(J))))
        else:
            j = int(rng.integers(1, J + 1))
            joints = rng.choice(J, size=j, replace=False)
            cols = sorted(layout.joint_columns(set(int(x) for x in joints)))
        mask[np.ix_(frames, cols)] = 1.0
    elif scheme.kind == "every_t":
        frames = np.arange(0, valid_length, scheme.spacing)
        mask[frames] = 1.0
    elif scheme.kind == "joint_subset":
        cols = sorted(layout.joint_columns(set(scheme.joints)))
        mask[np.ix_(np.arange(valid_length), cols)] = 1.0
    elif scheme.kind == "root_trajectory":
        mask[:valid_length, :ROOT_BLOCK_WIDTH] = 1.0
    elif scheme.kind == "vr_joints":
        cols = sorted(layout.joint_columns(set(layout.skeleton.vr_joint_ids)))
        mask[np.ix_(np.arange(valid_length), cols)] = 1.0
    elif scheme.kind == "explicit":
        for frame, joints in scheme.explicit or ():
            if not 0 <= frame < valid_length:
                raise MaskError(f"explicit frame {frame} >= valid_length {valid_length}")
            cols = sorted(layout.joint_columns(set(joints)))
            mask[frame, cols] = 1.0
    return mask


def masked_sum(obs: ObservationSpec, x: np.ndarray) -> np.ndarray:
    """Elementwise select: observed entries from the signal, the rest from x."""
    if obs.mask.shape != x.shape:
        raise MaskError(f"mask {obs.mask.shape} and sample {x.shape} disagree")
    return obs.mask * obs.signal + (1.0 - obs.mask) * x


def concat_mask(x_masked: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Stack the masked sample and its mask along features: [N, 2F]."""
    if x_masked.shape != mask.shape:
        raise MaskError(f"sample {x_masked.shape} and mask {mask.shape} disagree")
    return np.concatenate([x_masked, mask], axis=1)


def split_mask(stacked: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if stacked.shape[1] % 2:
        raise MaskError("stacked width must be even")
    F = stacked.shape[1] // 2
    return stacked[:, :F], stacked[:, F:]
