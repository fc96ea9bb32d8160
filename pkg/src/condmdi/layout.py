"""Per-frame feature layout: named column blocks over a fixed-width vector.

The canonical humanoid layout is 263-wide: 4 root/global channels, 21x3 local
joint positions, 21x6 local 6d rotations, 22x3 joint velocities, 4 foot
contacts. Non-root joints own their position/rotation/velocity columns; the
root owns the 4 global-trajectory channels. The root's own velocity channels
are only exposed by a full-pose selection (see ``FeatureLayout.joint_columns``).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .skeleton import SkeletonSpec, HUMANOID22

ROOT_BLOCK_WIDTH = 4  # heading, x, z, height

COL_ROOT_ROT = 0
COL_ROOT_X = 1
COL_ROOT_Z = 2
COL_ROOT_HEIGHT = 3


@dataclass(frozen=True)
class FeatureLayout:
    """Column bookkeeping for one skeleton's feature vector."""

    skeleton: SkeletonSpec
    contact_joint_ids: tuple[int, ...]

    def __post_init__(self):
        J = self.skeleton.joint_count
        for c in self.contact_joint_ids:
            if c not in self.skeleton.foot_joint_ids:
                raise ValueError(f"contact joint {c} is not a foot joint")
        if J < 2:
            raise ValueError("layout needs a root and at least one limb joint")

    # -- block geometry -------------------------------------------------
    @property
    def joint_count(self) -> int:
        return self.skeleton.joint_count

    @property
    def positions_start(self) -> int:
        return ROOT_BLOCK_WIDTH

    @property
    def rotations_start(self) -> int:
        return self.positions_start + (self.joint_count - 1) * 3

    @property
    def velocities_start(self) -> int:
        return self.rotations_start + (self.joint_count - 1) * 6

    @property
    def contacts_start(self) -> int:
        return self.velocities_start + self.joint_count * 3

    @property
    def total_width(self) -> int:
        return self.contacts_start + len(self.contact_joint_ids)

    def block_slices(self) -> dict[str, slice]:
        return {
            "root_rot": slice(COL_ROOT_ROT, COL_ROOT_ROT + 1),
            "root_xz": slice(COL_ROOT_X, COL_ROOT_Z + 1),
            "root_height": slice(COL_ROOT_HEIGHT, COL_ROOT_HEIGHT + 1),
            "local_positions": slice(self.positions_start, self.rotations_start),
            "local_rotations": slice(self.rotations_start, self.velocities_start),
            "velocities": slice(self.velocities_start, self.contacts_start),
            "foot_contacts": slice(self.contacts_start, self.total_width),
        }

    # -- per-joint columns ----------------------------------------------
    def position_columns(self, joint_id: int) -> range:
        self._check_nonroot(joint_id)
        s = self.positions_start + (joint_id - 1) * 3
        return range(s, s + 3)

    def rotation_columns(self, joint_id: int) -> range:
        self._check_nonroot(joint_id)
        s = self.rotations_start + (joint_id - 1) * 6
        return range(s, s + 6)

    def velocity_columns(self, joint_id: int) -> range:
        if not 0 <= joint_id < self.joint_count:
            raise KeyError(f"unknown joint id {joint_id}")
        s = self.velocities_start + joint_id * 3
        return range(s, s + 3)

    def contact_columns_for(self, joint_id: int) -> list[int]:
        """Contact columns on the same side as the given foot/ankle joint."""
        skel = self.skeleton
        if joint_id in skel.left_foot_ids:
            side = skel.left_foot_ids
        elif joint_id in skel.right_foot_ids:
            side = skel.right_foot_ids
        else:
            return []
        return [self.contacts_start + i
                for i, c in enumerate(self.contact_joint_ids) if c in side]

    def joint_columns(self, joints: set[int] | frozenset[int]) -> set[int]:
        """Columns observed when the given joint subset is keyframed.

        The root/global channels are always included. A selection covering
        every joint maps to the full feature vector (a full-pose keyframe also
        pins the root velocity channels, which no single joint owns).
        """
        J = self.joint_count
        for j in joints:
            if not 0 <= j < J:
                raise KeyError(f"unknown joint id {j}")
        if len(set(joints)) == J:
            return set(range(self.total_width))
        cols = set(range(ROOT_BLOCK_WIDTH))
        for j in joints:
            if j == self.skeleton.root_joint_id:
                continue
            cols.update(self.position_columns(j))
            cols.update(self.rotation_columns(j))
            cols.update(self.velocity_columns(j))
            cols.update(self.contact_columns_for(j))
        return cols

    def _check_nonroot(self, joint_id: int):
        if not 0 <= joint_id < self.joint_count:
            raise KeyError(f"unknown joint id {joint_id}")
        if joint_id == self.skeleton.root_joint_id:
            raise KeyError("root joint has no local position/rotation columns")

    # -- identity --------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "skeleton": self.skeleton.name,
            "joint_count": self.joint_count,
            "contact_joint_ids": list(self.contact_joint_ids),
            "total_width": self.total_width,
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def canonical_layout() -> FeatureLayout:
    """The 263-wide humanoid22 layout (contacts: L ankle, L foot, R ankle, R foot)."""
    return FeatureLayout(skeleton=HUMANOID22, contact_joint_ids=(7, 10, 8, 11))
