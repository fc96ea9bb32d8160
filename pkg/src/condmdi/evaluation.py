"""Metric suite: keyframe error, foot skating, diversity, distribution
distance between feature sets, and top-3 retrieval precision, plus the batch
harness that scores a checkpoint over a keyframing scheme.

Feature extractors are pluggable; the bundled toy extractor (mean pose passed
through a fixed seeded projection, hashed-token text features) is deterministic
and suitable for trend checks only, not for comparison with published numbers.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Protocol

import numpy as np

from .checkpoint import LoadedCheckpoint
from .layout import COL_ROOT_X, COL_ROOT_Z, FeatureLayout
from .masks import MaskScheme, ObservationSpec, generate_mask
from .motion import MotionSequence, recover_joint_positions
from .sampling import SamplerConfig, sample_batch
from .skeleton import SkeletonSpec
from .text import HashedBagOfTokens, token_bucket

CONTACT_HEIGHT_M = 0.05
SKATE_DISTANCE_M = 0.025


class MetricError(ValueError):
    pass


def keyframe_error(generated: MotionSequence, obs: ObservationSpec) -> float:
    """Mean ground-plane distance (meters) between generated and observed root
    positions over the keyframed frames. Both inputs are in world units."""
    frames = obs.observed_frames()
    if frames.size == 0:
        raise MetricError("observation is empty")
    gen = generated.data[frames][:, [COL_ROOT_X, COL_ROOT_Z]].astype(np.float64)
    ref = obs.signal[frames][:, [COL_ROOT_X, COL_ROOT_Z]].astype(np.float64)
    return float(np.linalg.norm(gen - ref, axis=1).mean())


def foot_skating_ratio(positions: np.ndarray, skel: SkeletonSpec) -> float:
    """Fraction of frame transitions where some foot keeps ground contact
    (height < 5 cm at both frames) yet slides more than 2.5 cm horizontally."""
    if positions.ndim != 3 or positions.shape[0] < 2:
        raise MetricError("positions must be [N >= 2, J, 3]")
    feet = list(skel.foot_joint_ids)
    if not feet:
        raise MetricError("skeleton defines no foot joints")
    p = positions[:, feet, :]  # [N, nf, 3]
    contact = (p[:-1, :, 1] < CONTACT_HEIGHT_M) & (p[1:, :, 1] < CONTACT_HEIGHT_M)
    slide = np.linalg.norm(p[1:, :, [0, 2]] - p[:-1, :, [0, 2]], axis=-1)
    skating = (contact & (slide > SKATE_DISTANCE_M)).any(axis=1)
    return float(skating.sum()) / (positions.shape[0] - 1)


def paired_diversity(first: np.ndarray, second: np.ndarray) -> float:
    """Mean Euclidean distance over aligned feature pairs."""
    first = np.asarray(first, dtype=np.float64)
    second = np.asarray(second, dtype=np.float64)
    if first.shape != second.shape:
        raise MetricError("paired subsets must share shape")
    return float(np.linalg.norm(first - second, axis=1).mean())


def diversity(features: np.ndarray, subset_size: int = 200,
              rng: np.random.Generator | None = None,
              with_replacement: bool = False) -> float:
    """Mean distance between two random same-size feature subsets
    (disjoint, drawn without replacement unless the flag is set)."""
    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    rng = rng or np.random.default_rng(0)
    if with_replacement:
        first = rng.integers(0, n, size=subset_size)
        second = rng.integers(0, n, size=subset_size)
    else:
        if n < 2 * subset_size:
            raise MetricError(
                f"need at least {2 * subset_size} samples, got {n}")
        idx = rng.permutation(n)
        first, second = idx[:subset_size], idx[subset_size:2 * subset_size]
    return paired_diversity(features[first], features[second])


def _sqrtm_trace(sigma1: np.ndarray, sigma2: np.ndarray) -> float:
    """Trace of the matrix square root of sigma1 @ sigma2 via two symmetric
    eigendecompositions; negative eigenvalues are clamped to zero."""
    w1, v1 = np.linalg.eigh(sigma1)
    root1 = (v1 * np.sqrt(np.clip(w1, 0.0, None))) @ v1.T
    inner = root1 @ sigma2 @ root1
    w = np.linalg.eigh(inner)[0]
    return float(np.sqrt(np.clip(w, 0.0, None)).sum())


def fid(features_a: np.ndarray, features_b: np.ndarray,
        regularization: float = 1e-6) -> float:
    """Distance between Gaussians fitted to the two feature sets."""
    a = np.asarray(features_a, dtype=np.float64)
    b = np.asarray(features_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise MetricError("feature sets must be [n, d] with a shared width")
    mu1, mu2 = a.mean(axis=0), b.mean(axis=0)
    s1 = np.cov(a, rowvar=False).reshape(a.shape[1], a.shape[1])
    s2 = np.cov(b, rowvar=False).reshape(b.shape[1], b.shape[1])
    if a.shape[0] <= a.shape[1] or b.shape[0] <= b.shape[1]:
        eye = np.eye(a.shape[1]) * regularization
        s1, s2 = s1 + eye, s2 + eye
    mean_term = float(((mu1 - mu2) ** 2).sum())
    value = mean_term + float(np.trace(s1) + np.trace(s2)) - 2.0 * _sqrtm_trace(s1, s2)
    if not np.isfinite(value):
        raise MetricError("covariance not positive semidefinite after regularization")
    return max(value, 0.0)


def r_precision_top3(motion_features: np.ndarray, text_features: np.ndarray,
                     batch_size: int = 32,
                     rng: np.random.Generator | None = None) -> float:
    """Top-3 retrieval accuracy of each motion against a shuffled batch of
    candidate texts (its own text plus batch_size - 1 negatives)."""
    m = np.asarray(motion_features, dtype=np.float64)
    t = np.asarray(text_features, dtype=np.float64)
    if m.shape != t.shape:
        raise MetricError("motion and text feature sets must align")
    n = m.shape[0]
    if n < batch_size:
        raise MetricError(f"need at least {batch_size} pairs, got {n}")
    rng = rng or np.random.default_rng(0)
    order = rng.permutation(n)
    hits, scored = 0, 0
    for start in range(0, n - batch_size + 1, batch_size):
        idx = order[start:start + batch_size]
        dist = np.linalg.norm(m[idx][:, None, :] - t[idx][None, :, :], axis=-1)
        # stable sort keeps ties in index order
        ranks = np.argsort(dist, axis=1, kind="stable")
        for row in range(batch_size):
            if row in ranks[row, :3]:
                hits += 1
            scored += 1
    return hits / scored


class FeatureExtractor(Protocol):
    def motion_features(self, seq: MotionSequence) -> np.ndarray: ...

    def text_features(self, prompt: str) -> np.ndarray: ...


class ToyFeatureExtractor:
    """Deterministic stand-in extractor: mean valid pose through a fixed
    random projection; hashed token counts for text."""

    def __init__(self, layout: FeatureLayout, width: int = 32, seed: int = 7):
        self.width = width
        rng = np.random.default_rng(seed)
        self._proj = rng.standard_normal(
            (layout.total_width, width)).astype(np.float64) / np.sqrt(width)

    def motion_features(self, seq: MotionSequence) -> np.ndarray:
        pose = seq.data[:seq.valid_length].mean(axis=0).astype(np.float64)
        return pose @ self._proj

    def text_features(self, prompt: str) -> np.ndarray:
        vec = np.zeros(self.width)
        for tok in HashedBagOfTokens(self.width).tokenize(prompt):
            vec[token_bucket(tok, self.width)] += 1.0
        return vec


@dataclass
class EvalReport:
    fid: float
    r_precision_top3: float
    diversity: float
    foot_skating_ratio: float
    keyframe_error_m: float
    sample_count: int
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        values = [self.fid, self.r_precision_top3, self.diversity,
                  self.foot_skating_ratio, self.keyframe_error_m]
        if not all(np.isfinite(v) for v in values):
            raise MetricError("metrics must be finite")
        if self.sample_count <= 0:
            raise MetricError("report needs a positive sample count")

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)

    def save(self, path: str | Path):
        Path(path).write_text(self.to_json())


def scheme_from_name(name: str, layout: FeatureLayout) -> MaskScheme:
    """Parse CLI scheme names: randomK=5, everyT=20, root, vr, joint:<name>."""
    if name.startswith("randomK="):
        return MaskScheme.random_frames(int(name.split("=", 1)[1]))
    if name.startswith("everyT="):
        return MaskScheme.every_t(int(name.split("=", 1)[1]))
    if name == "root":
        return MaskScheme.root_trajectory()
    if name == "vr":
        return MaskScheme.vr_joints()
    if name.startswith("joint:"):
        names = name.split(":", 1)[1].split(",")
        ids = tuple(layout.skeleton.joint_id(n) for n in names)
        return MaskScheme.joint_subset(ids)
    raise MetricError(f"unknown scheme {name!r}")


def evaluate_scheme(checkpoint: LoadedCheckpoint,
                    clips: list[tuple[MotionSequence, str]],
                    scheme: MaskScheme, sampler_config: SamplerConfig,
                    extractor: FeatureExtractor,
                    seed: int = 0,
                    diversity_subset: int | None = None,
                    batch_size: int = 16) -> EvalReport:
    """Score one keyframing scheme: sample one generation per clip using
    ground-truth keyframes and the clip's prompt, then compute all metrics."""
    if not clips:
        raise MetricError("dataset is empty")
    layout = checkpoint.layout
    N = checkpoint.config.max_frames
    rng = np.random.default_rng(seed)

    observations, prompts, lengths, refs = [], [], [], []
    for seq, prompt in clips:
        if seq.num_frames != N:
            raise MetricError(f"clip has {seq.num_frames} frames, model expects {N}")
        mask = generate_mask(scheme, layout, N, seq.valid_length, rng)
        observations.append(ObservationSpec.from_values(seq.data, mask))
        prompts.append(prompt)
        lengths.append(seq.valid_length)
        refs.append(seq)

    generated: list[MotionSequence] = []
    wall_ms = 0.0
    for start in range(0, len(clips), batch_size):
        sl = slice(start, start + batch_size)
        run_cfg = replace(sampler_config, seed=sampler_config.seed + start)
        res = sample_batch(run_cfg, prompts[sl], observations[sl], lengths[sl],
                           checkpoint)
        generated.extend(res.sequences)
        wall_ms += res.wall_ms

    gen_feats = np.stack([extractor.motion_features(s) for s in generated])
    ref_feats = np.stack([extractor.motion_features(s) for s in refs])
    text_feats = np.stack([extractor.text_features(p) for p in prompts])

    kf_errors = [keyframe_error(g, o) for g, o in zip(generated, observations)
                 if not o.empty]
    skate = [foot_skating_ratio(
        recover_joint_positions(g, layout.skeleton)[:g.valid_length],
        layout.skeleton) for g in generated if g.valid_length >= 2]

    n = len(generated)
    subset = diversity_subset if diversity_subset is not None else max(2, n // 2)
    div = diversity(gen_feats, subset_size=subset,
                    rng=np.random.default_rng(seed + 1),
                    with_replacement=n < 2 * subset)
    rprec = r_precision_top3(gen_feats, text_feats,
                             batch_size=min(32, n),
                             rng=np.random.default_rng(seed + 2))

    return EvalReport(
        fid=fid(gen_feats, ref_feats),
        r_precision_top3=rprec,
        diversity=div,
        foot_skating_ratio=float(np.mean(skate)) if skate else 0.0,
        keyframe_error_m=float(np.mean(kf_errors)) if kf_errors else 0.0,
        sample_count=n,
        config={"scheme": scheme.kind, "sampler": sampler_config.to_dict(),
                "seed": seed, "wall_ms": wall_ms},
    )
