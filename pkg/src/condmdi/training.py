"""Training loop: random-mask batch assembly, masked-input loss, AdamW with
gradient clipping, and EMA maintenance.

Per sample the assembler draws a random observation mask, drops the text
prompt and the keyframe signal independently with the configured
probabilities, noises the clean sequence at a uniform step, splices the
observed values back in, and stacks the mask as extra input channels. The
objective is the mean squared error between the clean sequence and the
network's estimate over valid frames (observed entries included).
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .checkpoint import save_checkpoint
from .denoiser import DenoiserConfig, DenoiserState, MotionDenoiser, batch_text_tensors
from .layout import FeatureLayout
from .masks import MaskScheme, generate_mask
from .motion import NormalizationStats
from .schedule import NoiseSchedule
from .text import HashedBagOfTokens, TextEncoder


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 1_000_000
    learning_rate: float = 1e-4
    weight_decay: float = 1e-2
    batch_size: int = 64
    grad_clip_norm: float = 1.0
    text_dropout: float = 0.10
    keyframe_dropout: float = 0.10
    ema_decay: float = 0.9999
    seed: int = 0
    mask_scheme: MaskScheme = field(
        default_factory=MaskScheme.random_frames_and_joints)
    masked_loss: bool = False  # restrict the loss to unobserved entries
    checkpoint_interval: int = 50_000

    def __post_init__(self):
        if not 0 <= self.text_dropout <= 1 or not 0 <= self.keyframe_dropout <= 1:
            raise ValueError("dropout probabilities must lie in [0, 1]")
        if self.grad_clip_norm <= 0:
            raise ValueError("grad clip norm must be positive")
        if not 0 <= self.ema_decay <= 1:
            raise ValueError("EMA decay must lie in [0, 1]")


@dataclass
class TrainingExample:
    """One clip ready for batch assembly: normalized, global-root features."""

    features: np.ndarray  # [N, F] float32
    prompt: str
    valid_length: int


def clip_gradients(grads: list[torch.Tensor], max_norm: float) -> float:
    """Scale gradients in place so their global L2 norm is at most max_norm.

    Returns the pre-clip norm. Direction is preserved when scaling applies.
    """
    if max_norm <= 0:
        raise ValueError("max_norm must be positive")
    total = math.sqrt(sum(float(g.detach().pow(2).sum()) for g in grads))
    if total > max_norm:
        scale = max_norm / total
        for g in grads:
            g.detach().mul_(scale)
    return total


def ema_update(ema: dict[str, torch.Tensor],
               params: dict[str, torch.Tensor], decay: float) -> None:
    """Shadow update: ema <- decay * ema + (1 - decay) * params."""
    with torch.no_grad():
        for name, p in params.items():
            ema[name].mul_(decay).add_(p.detach(), alpha=1.0 - decay)


@dataclass
class AssembledBatch:
    model_input: torch.Tensor   # [B, N, Cin]
    target: torch.Tensor        # [B, N, F]
    t: torch.Tensor             # [B]
    text_vectors: torch.Tensor  # [B, W]
    text_nulls: torch.Tensor    # [B] bool
    loss_mask: torch.Tensor     # [B, N, F] entries that count toward the loss
    dropped_text: np.ndarray    # [B] bool, for accounting
    dropped_keyframes: np.ndarray


def assemble_batch(examples: list[TrainingExample], layout: FeatureLayout,
                   schedule: NoiseSchedule, config: TrainConfig,
                   encoder: TextEncoder, rng: np.random.Generator,
                   input_mode: str = "masked") -> AssembledBatch:
    widths = {e.features.shape[1] for e in examples}
    lengths = {e.features.shape[0] for e in examples}
    if len(widths) != 1 or len(lengths) != 1:
        raise TrainingError("batch clips must share frame count and width")
    B = len(examples)
    N, F = examples[0].features.shape
    T = schedule.num_steps

    x0 = np.stack([e.features for e in examples]).astype(np.float32)
    masks = np.zeros((B, N, F), dtype=np.float32)
    drop_text = np.zeros(B, dtype=bool)
    drop_keyframes = np.zeros(B, dtype=bool)
    embeddings = []
    for b, ex in enumerate(examples):
        drop_keyframes[b] = rng.random() < config.keyframe_dropout
        if not drop_keyframes[b]:
            masks[b] = generate_mask(config.mask_scheme, layout, N,
                                     ex.valid_length, rng)
        drop_text[b] = rng.random() < config.text_dropout
        embeddings.append(encoder.encode(None if drop_text[b] else ex.prompt))

    t = rng.integers(1, T + 1, size=B)
    eps = rng.standard_normal((B, N, F)).astype(np.float32)
    ab = schedule.alpha_bar[t].astype(np.float32)[:, None, None]
    x_t = np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps
    x_masked = masks * x0 + (1.0 - masks) * x_t
    if input_mode == "masked":
        model_input = np.concatenate([x_masked, masks], axis=2)
    else:
        model_input = x_masked

    valid = np.zeros((B, N, 1), dtype=np.float32)
    for b, ex in enumerate(examples):
        valid[b, :ex.valid_length] = 1.0
    loss_mask = np.broadcast_to(valid, (B, N, F)).copy()
    if config.masked_loss:
        loss_mask *= 1.0 - masks

    vectors, nulls = batch_text_tensors(embeddings, encoder.width)
    return AssembledBatch(
        model_input=torch.from_numpy(model_input),
        target=torch.from_numpy(x0),
        t=torch.from_numpy(t),
        text_vectors=vectors,
        text_nulls=nulls,
        loss_mask=torch.from_numpy(loss_mask),
        dropped_text=drop_text,
        dropped_keyframes=drop_keyframes,
    )


def batch_loss(model: MotionDenoiser, batch: AssembledBatch) -> torch.Tensor:
    out = model(batch.model_input, batch.t, batch.text_vectors, batch.text_nulls)
    sq = (batch.target - out) ** 2 * batch.loss_mask
    return sq.sum() / batch.loss_mask.sum()


def train_step(state: DenoiserState, optimizer: torch.optim.Optimizer,
               examples: list[TrainingExample], layout: FeatureLayout,
               schedule: NoiseSchedule, config: TrainConfig,
               encoder: TextEncoder, rng: np.random.Generator) -> float:
    batch = assemble_batch(examples, layout, schedule, config, encoder, rng,
                           input_mode=state.model.config.input_mode)
    optimizer.zero_grad(set_to_none=True)
    loss = batch_loss(state.model, batch)
    if not torch.isfinite(loss):
        raise TrainingError(f"non-finite loss at step {state.step}")
    loss.backward()
    grads = [p.grad for p in state.model.parameters() if p.grad is not None]
    clip_gradients(grads, config.grad_clip_norm)
    optimizer.step()
    ema_update(state.ema, dict(state.model.state_dict()), config.ema_decay)
    state.step += 1
    return float(loss.detach())


@dataclass
class TrainResult:
    state: DenoiserState
    losses: list[float]
    checkpoint_paths: list[Path]
    loss_log_path: Path
    wall_seconds: float


def train_loop(examples: list[TrainingExample], layout: FeatureLayout,
               schedule: NoiseSchedule, denoiser_config: DenoiserConfig,
               config: TrainConfig, stats: NormalizationStats, fps: float,
               out_dir: str | Path,
               encoder: TextEncoder | None = None,
               log_every: int = 50) -> TrainResult:
    """Seeded training driver; persists checkpoints and a step/loss CSV."""
    if not examples:
        raise TrainingError("dataset is empty")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    encoder = encoder or HashedBagOfTokens(denoiser_config.embed_width)
    if encoder.width != denoiser_config.embed_width:
        raise TrainingError("encoder width does not match denoiser embed width")

    rng = np.random.default_rng(config.seed)
    torch.manual_seed(config.seed)
    model = MotionDenoiser(denoiser_config)
    state = DenoiserState(model=model)
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate,
                                  weight_decay=config.weight_decay)

    def save(tag: str) -> Path:
        path = out_dir / f"ckpt_{tag}.npz"
        save_checkpoint(path, state, schedule, layout, stats, fps)
        return path

    losses: list[float] = []
    paths: list[Path] = []
    started = time.perf_counter()
    log_path = out_dir / "loss_log.csv"
    with open(log_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss"])
        if config.iterations == 0:
            paths.append(save("final"))
        for it in range(config.iterations):
            idx = rng.choice(len(examples), size=min(config.batch_size, len(examples)),
                             replace=len(examples) < config.batch_size)
            try:
                loss = train_step(state, optimizer, [examples[i] for i in idx],
                                  layout, schedule, config, encoder, rng)
            except OSError as e:
                raise TrainingError(f"I/O failure at step {state.step}: {e}") from e
            losses.append(loss)
            writer.writerow([state.step, repr(loss)])
            if log_every and state.step % log_every == 0:
                fh.flush()
            if config.checkpoint_interval and state.step % config.checkpoint_interval == 0:
                paths.append(save(f"{state.step:08d}"))
        if config.iterations > 0:
            paths.append(save("final"))
    return TrainResult(state=state, losses=losses, checkpoint_paths=paths,
                       loss_log_path=log_path,
                       wall_seconds=time.perf_counter() - started)
