"""Keyframe JSON schema shared by the CLI, the HTTP service and the UI.

Document shape::

    {"frames": [{"index": 12,
                 "joints": ["root", "left_wrist"] | "all",
                 "values": {"root": [theta, x, z, h],
                            "left_wrist": [px, py, pz, r0..r5, vx, vy, vz]}}]}

``joints`` selects which feature columns are observed at the frame (the root
is always included); ``values`` supplies the observed numbers keyed by joint
name, by the root block names (``root``, ``root_rot``, ``root_xz``,
``root_height``), or by ``all`` (a full feature row). Observed columns
without a supplied value default to zero.
"""
from __future__ import annotations

from typing import Any

import numpy as np

from .layout import FeatureLayout, ROOT_BLOCK_WIDTH
from .masks import ObservationSpec


class KeyframeValidationError(ValueError):
    """Invalid keyframe document; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.detail = message


def _joint_value_columns(layout: FeatureLayout, joint_id: int) -> list[int]:
    cols = list(layout.position_columns(joint_id))
    cols += list(layout.rotation_columns(joint_id))
    cols += list(layout.velocity_columns(joint_id))
    return cols


def parse_keyframes(doc: dict[str, Any], layout: FeatureLayout,
                    length: int) -> ObservationSpec:
    """Build an observation over [length, F] from a keyframe document."""
    if not isinstance(doc, dict) or "frames" not in doc:
        raise KeyframeValidationError("keyframes", "expected an object with a 'frames' list")
    frames = doc["frames"]
    if not isinstance(frames, list):
        raise KeyframeValidationError("keyframes.frames", "expected a list")

    F = layout.total_width
    skel = layout.skeleton
    mask = np.zeros((length, F), dtype=np.float32)
    values = np.zeros((length, F), dtype=np.float32)
    seen: set[int] = set()

    for i, entry in enumerate(frames):
        path = f"keyframes[{i}]"
        if not isinstance(entry, dict):
            raise KeyframeValidationError(path, "expected an object")
        idx = entry.get("index")
        if not isinstance(idx, int) or isinstance(idx, bool):
            raise KeyframeValidationError(f"{path}.index", "expected an integer")
        if not 0 <= idx < length:
            raise KeyframeValidationError(
                f"{path}.index", f"frame {idx} out of range [0, {length})")
        if idx in seen:
            raise KeyframeValidationError(f"{path}.index", f"duplicate frame {idx}")
        seen.add(idx)

        joints = entry.get("joints", "all")
        if joints == "all":
            joint_ids = set(range(skel.joint_count))
        elif isinstance(joints, list):
            joint_ids = set()
            for k, name in enumerate(joints):
                try:
                    joint_ids.add(skel.joint_id(str(name)))
                except KeyError:
                    raise KeyframeValidationError(
                        f"{path}.joints[{k}]", f"unknown joint {name!r}") from None
            joint_ids.add(skel.root_joint_id)
        else:
            raise KeyframeValidationError(
                f"{path}.joints", "expected 'all' or a list of joint names")
        cols = sorted(layout.joint_columns(joint_ids))
        mask[idx, cols] = 1.0

        vals = entry.get("values", {})
        if not isinstance(vals, dict):
            raise KeyframeValidationError(f"{path}.values", "expected an object")
        for key, arr in vals.items():
            vpath = f"{path}.values.{key}"
            target = _resolve_value_columns(layout, key, vpath)
            arr = np.asarray(arr, dtype=np.float64)
            if arr.shape != (len(target),):
                raise KeyframeValidationError(
                    vpath, f"expected {len(target)} numbers, got shape {arr.shape}")
            if not np.isfinite(arr).all():
                raise KeyframeValidationError(vpath, "values must be finite")
            values[idx, target] = arr

    return ObservationSpec.from_values(values, mask)


def _resolve_value_columns(layout: FeatureLayout, key: str, path: str) -> list[int]:
    blocks = {
        "all": list(range(layout.total_width)),
        "root": list(range(ROOT_BLOCK_WIDTH)),
        "root_rot": [0],
        "root_xz": [1, 2],
        "root_height": [3],
    }
    if key in blocks:
        return blocks[key]
    skel = layout.skeleton
    try:
        jid = skel.joint_id(key)
    except KeyError:
        raise KeyframeValidationError(path, f"unknown value key {key!r}") from None
    if jid == skel.root_joint_id:
        return blocks["root"]
    return _joint_value_columns(layout, jid)


def keyframes_from_observation(obs: ObservationSpec, layout: FeatureLayout) -> dict:
    """Serialize an observation back to the JSON schema (full rows only)."""
    frames = []
    for idx in obs.observed_frames():
        row_mask = obs.mask[idx]
        if row_mask.all():
            frames.append({"index": int(idx), "joints": "all",
                           "values": {"all": obs.signal[idx].tolist()}})
        else:
            joints, values = _row_to_joints(obs, layout, int(idx))
            frames.append({"index": int(idx), "joints": joints, "values": values})
    return {"frames": frames}


def _row_to_joints(obs: ObservationSpec, layout: FeatureLayout, idx: int):
    skel = layout.skeleton
    row_mask = obs.mask[idx]
    joints, values = [], {}
    if row_mask[:ROOT_BLOCK_WIDTH].any():
        joints.append(skel.joint_names[skel.root_joint_id])
        values["root"] = obs.signal[idx, :ROOT_BLOCK_WIDTH].tolist()
    for j in range(skel.joint_count):
        if j == skel.root_joint_id:
            continue
        cols = _joint_value_columns(layout, j)
        if row_mask[cols].any():
            joints.append(skel.joint_names[j])
            values[skel.joint_names[j]] = obs.signal[idx, cols].tolist()
    return joints, values
