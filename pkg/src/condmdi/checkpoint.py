"""Checkpoint container: one .npz holding a JSON manifest and named tensors.

The manifest records the denoiser config, training step, schedule and layout
digests, and the format version; loading rebuilds schedule and layout from
their stored parameters and rejects digest mismatches. Normalization stats
ride along so sampling is self-contained.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .denoiser import DenoiserConfig, DenoiserState, MotionDenoiser
from .layout import FeatureLayout
from .motion import NormalizationStats
from .schedule import NoiseSchedule, cosine_schedule
from .skeleton import get_skeleton

FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


@dataclass
class LoadedCheckpoint:
    state: DenoiserState
    config: DenoiserConfig
    schedule: NoiseSchedule
    layout: FeatureLayout
    stats: NormalizationStats
    fps: float
    manifest: dict

    def digest(self) -> str:
        return self.manifest["schedule_digest"][:12] + self.manifest["layout_digest"][:12]


def save_checkpoint(path: str | Path, state: DenoiserState,
                    schedule: NoiseSchedule, layout: FeatureLayout,
                    stats: NormalizationStats, fps: float,
                    schedule_kind: str = "cosine") -> None:
    manifest = {
        "format_version": FORMAT_VERSION,
        "config": state.model.config.to_dict(),
        "step": state.step,
        "schedule_kind": schedule_kind,
        "num_steps": schedule.num_steps,
        "schedule_digest": schedule.digest(),
        "layout": layout.to_dict(),
        "layout_digest": layout.digest(),
        "fps": fps,
    }
    arrays: dict[str, np.ndarray] = {
        "__manifest__": np.frombuffer(
            json.dumps(manifest, sort_keys=True).encode(), dtype=np.uint8),
        "stats/mean": stats.mean,
        "stats/std": stats.std,
    }
    for name, tensor in state.model.state_dict().items():
        arrays[f"param/{name}"] = tensor.detach().cpu().numpy().astype(np.float32)
    for name, tensor in state.ema.items():
        arrays[f"ema/{name}"] = tensor.detach().cpu().numpy().astype(np.float32)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path: str | Path,
                    expected_layout: FeatureLayout | None = None) -> LoadedCheckpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"no such checkpoint: {path}")
    with np.load(path) as z:
        if "__manifest__" not in z:
            raise CheckpointError(f"{path}: missing manifest")
        manifest = json.loads(bytes(z["__manifest__"]).decode())
        if manifest.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(
                f"{path}: unsupported format version {manifest.get('format_version')}")
        config = DenoiserConfig.from_dict(manifest["config"])

        if manifest["schedule_kind"] != "cosine":
            raise CheckpointError(
                f"{path}: unknown schedule kind {manifest['schedule_kind']!r}")
        schedule = cosine_schedule(manifest["num_steps"])
        if schedule.digest() != manifest["schedule_digest"]:
            raise CheckpointError(f"{path}: schedule digest mismatch")

        lay = manifest["layout"]
        layout = FeatureLayout(skeleton=get_skeleton(lay["skeleton"]),
                               contact_joint_ids=tuple(lay["contact_joint_ids"]))
        if layout.digest() != manifest["layout_digest"]:
            raise CheckpointError(f"{path}: layout digest mismatch")
        if expected_layout is not None and expected_layout.digest() != layout.digest():
            raise CheckpointError(f"{path}: checkpoint layout does not match")

        params, ema = {}, {}
        for key in z.files:
            if key.startswith("param/"):
                params[key[len("param/"):]] = torch.from_numpy(z[key].copy())
            elif key.startswith("ema/"):
                ema[key[len("ema/"):]] = torch.from_numpy(z[key].copy())
        stats = NormalizationStats(mean=z["stats/mean"], std=z["stats/std"])

    model = MotionDenoiser(config)
    try:
        model.load_state_dict(params)
    except RuntimeError as e:
        raise CheckpointError(f"{path}: parameter blob mismatch: {e}") from None
    state = DenoiserState(model=model, ema=ema, step=manifest["step"])
    return LoadedCheckpoint(state=state, config=config, schedule=schedule,
                            layout=layout, stats=stats,
                            fps=manifest["fps"], manifest=manifest)
