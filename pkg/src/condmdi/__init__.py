"""Keyframe-conditioned motion in-betweening with masked diffusion models."""

__version__ = "0.1.0"
