"""Skeleton definitions for the 22-joint humanoid used by the feature layout."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SkeletonSpec:
    """A joint hierarchy with rest offsets in meters.

    The parent graph must be a tree rooted at ``root_joint_id``. Foot joints
    drive the contact channels and the skating metric.
    """

    name: str
    joint_names: tuple[str, ...]
    parent_index: tuple[int, ...]
    rest_offset: np.ndarray  # [J, 3] meters
    left_foot_ids: tuple[int, ...]
    right_foot_ids: tuple[int, ...]
    root_joint_id: int = 0
    vr_joint_names: tuple[str, ...] = ("head", "left_wrist", "right_wrist")

    def __post_init__(self):
        J = self.joint_count
        if J < 2:
            raise ValueError("skeleton needs at least 2 joints")
        if len(self.parent_index) != J or self.rest_offset.shape != (J, 3):
            raise ValueError("joint table widths disagree")
        if self.parent_index[self.root_joint_id] != -1:
            raise ValueError("root joint must have parent -1")
        for j, p in enumerate(self.parent_index):
            if j != self.root_joint_id and not (0 <= p < J and p != j):
                raise ValueError(f"joint {j} has invalid parent {p}")
        for f in self.foot_joint_ids:
            if not 0 <= f < J:
                raise ValueError(f"foot joint {f} out of range")
        # reject cycles: walking to the root must terminate
        for j in range(J):
            seen, cur = set(), j
            while cur != self.root_joint_id:
                if cur in seen:
                    raise ValueError("parent graph contains a cycle")
                seen.add(cur)
                cur = self.parent_index[cur]

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)

    @property
    def foot_joint_ids(self) -> tuple[int, ...]:
        return self.left_foot_ids + self.right_foot_ids

    @property
    def vr_joint_ids(self) -> tuple[int, ...]:
        return tuple(self.joint_names.index(n) for n in self.vr_joint_names)

    def joint_id(self, name: str) -> int:
        try:
            return self.joint_names.index(name)
        except ValueError:
            raise KeyError(f"unknown joint name: {name!r}") from None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "joint_names": list(self.joint_names),
            "parent_index": list(self.parent_index),
            "rest_offset": self.rest_offset.tolist(),
            "left_foot_ids": list(self.left_foot_ids),
            "right_foot_ids": list(self.right_foot_ids),
            "root_joint_id": self.root_joint_id,
            "vr_joint_names": list(self.vr_joint_names),
        }


_HUMANOID22_NAMES = (
    "root", "left_hip", "right_hip", "spine1", "left_knee", "right_knee",
    "spine2", "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot",
    "neck", "left_collar", "right_collar", "head", "left_shoulder",
    "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist",
)

_HUMANOID22_PARENTS = (
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19,
)

# y-up rest offsets (meters), a plain standing pose
_HUMANOID22_OFFSETS = np.array([
    [0.00, 0.00, 0.00],    # root (pelvis)
    [0.00, -0.05, 0.10],   # left_hip
    [0.00, -0.05, -0.10],  # right_hip
    [0.00, 0.12, 0.00],    # spine1
    [0.00, -0.40, 0.00],   # left_knee
    [0.00, -0.40, 0.00],   # right_knee
    [0.00, 0.14, 0.00],    # spine2
    [0.00, -0.40, 0.00],   # left_ankle
    [0.00, -0.40, 0.00],   # right_ankle
    [0.00, 0.14, 0.00],    # spine3
    [0.12, -0.06, 0.00],   # left_foot
    [0.12, -0.06, 0.00],   # right_foot
    [0.00, 0.10, 0.00],    # neck
    [0.00, 0.06, 0.06],    # left_collar
    [0.00, 0.06, -0.06],   # right_collar
    [0.00, 0.12, 0.00],    # head
    [0.00, 0.00, 0.12],    # left_shoulder
    [0.00, 0.00, -0.12],   # right_shoulder
    [0.00, 0.00, 0.26],    # left_elbow
    [0.00, 0.00, -0.26],   # right_elbow
    [0.00, 0.00, 0.25],    # left_wrist
    [0.00, 0.00, -0.25],   # right_wrist
], dtype=np.float64)

HUMANOID22 = SkeletonSpec(
    name="humanoid22",
    joint_names=_HUMANOID22_NAMES,
    parent_index=_HUMANOID22_PARENTS,
    rest_offset=_HUMANOID22_OFFSETS,
    left_foot_ids=(7, 10),   # left_ankle, left_foot
    right_foot_ids=(8, 11),  # right_ankle, right_foot
)

SKELETONS: dict[str, SkeletonSpec] = {HUMANOID22.name: HUMANOID22}


def get_skeleton(name: str) -> SkeletonSpec:
    try:
        return SKELETONS[name]
    except KeyError:
        raise KeyError(f"unknown skeleton: {name!r}") from None


def rest_local_positions(skel: SkeletonSpec) -> np.ndarray:
    """Rest-pose joint positions relative to the root, [J, 3]."""
    pos = np.zeros((skel.joint_count, 3))
    order = sorted(range(skel.joint_count),
                   key=lambda j: _depth(skel.parent_index, j, skel.root_joint_id))
    for j in order:
        p = skel.parent_index[j]
        if p >= 0:
            pos[j] = pos[p] + skel.rest_offset[j]
    return pos


def _depth(parents, j, root):
    d = 0
    while j != root:
        j = parents[j]
        d += 1
    return d
