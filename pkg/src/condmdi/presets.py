"""Named configuration presets.

``paper`` mirrors the published training setup (datacenter scale); ``desk``
is sized to train and sample on a CPU in minutes. The ``CONDMDI_PRESET``
environment variable overrides the default preset name.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

from .denoiser import DenoiserConfig
from .training import TrainConfig

PRESET_ENV = "CONDMDI_PRESET"


@dataclass(frozen=True)
class Preset:
    name: str
    num_steps: int
    max_frames: int
    denoiser: DenoiserConfig
    train: TrainConfig


def _paper(feature_width: int) -> Preset:
    return Preset(
        name="paper",
        num_steps=1000,
        max_frames=196,
        denoiser=DenoiserConfig(
            feature_width=feature_width, base_channels=512,
            channel_multipliers=(2, 2, 2, 2), max_frames=196),
        train=TrainConfig(iterations=1_000_000, batch_size=64,
                          checkpoint_interval=50_000),
    )


def _desk(feature_width: int) -> Preset:
    return Preset(
        name="desk",
        num_steps=100,
        max_frames=48,
        denoiser=DenoiserConfig(
            feature_width=feature_width, base_channels=32,
            channel_multipliers=(2, 2), max_frames=48),
        train=TrainConfig(iterations=4000, batch_size=8, learning_rate=3e-4,
                          ema_decay=0.995, checkpoint_interval=2000),
    )


def get_preset(name: str | None, feature_width: int) -> Preset:
    if name is None:
        name = os.environ.get(PRESET_ENV, "desk")
    builders = {"paper": _paper, "desk": _desk}
    if name not in builders:
        raise KeyError(f"unknown preset {name!r} (expected paper or desk)")
    return builders[name](feature_width)
