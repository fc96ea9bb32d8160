"""Reverse-process samplers behind one strategy switch.

``conditional`` re-imposes the observed keyframes on the noisy sample before
every network call and stacks the mask as input channels (the network must
have been trained that way). ``imputation`` and ``imputation_guidance`` drive
a plain denoiser and act on the clean estimate instead: guidance nudges the
unobserved entries along the gradient of the keyframe reconstruction error,
imputation overwrites the observed entries until the stop step is reached.
``unconditioned`` ignores the observation entirely.

All strategies share the loop: start from seeded Gaussian noise, estimate the
clean sample (classifier-free combination when a prompt is given), then step
to the posterior mean plus sigma-scaled noise, with zero noise at the final
step. The loop runs in normalized feature space; keyframe values arrive in
world units and are normalized against the checkpoint's training stats.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import torch

from .checkpoint import LoadedCheckpoint
from .denoiser import batch_text_tensors
from .masks import ObservationSpec
from .motion import Convention, MotionSequence, denormalize_array
from .schedule import NoiseSchedule, posterior_mean_coefficients, posterior_variance
from .text import HashedBagOfTokens, TextEncoder


class SamplerError(RuntimeError):
    pass


STRATEGIES = ("conditional", "imputation", "imputation_guidance", "unconditioned")

STRATEGY_ALIASES = {
    "cond": "conditional",
    "imp": "imputation",
    "imp+guide": "imputation_guidance",
    "uncond": "unconditioned",
}


def resolve_strategy(name: str) -> str:
    s = STRATEGY_ALIASES.get(name, name)
    if s not in STRATEGIES:
        raise SamplerError(f"unknown strategy {name!r}")
    return s


@dataclass(frozen=True)
class SamplerConfig:
    strategy: str = "conditional"
    cfg_weight: float = 2.5
    reconstruction_weight: float = 20.0
    stop_step: int = 1  # imputation stops once t <= stop_step; 0 never stops
    gradient_mode: str = "exact_backprop"  # or "surrogate"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "strategy", resolve_strategy(self.strategy))
        if self.cfg_weight < 0 or self.reconstruction_weight < 0:
            raise ValueError("guidance weights must be nonnegative")
        if self.stop_step < 0:
            raise ValueError("stop step must be nonnegative")
        if self.gradient_mode not in ("exact_backprop", "surrogate"):
            raise ValueError(f"unknown gradient mode {self.gradient_mode!r}")

    def to_dict(self) -> dict:
        return {"strategy": self.strategy, "w": self.cfg_weight,
                "w_r": self.reconstruction_weight, "C": self.stop_step,
                "gradient_mode": self.gradient_mode, "seed": self.seed}


def cfg_combine(uncond: torch.Tensor, cond: torch.Tensor, weight: float) -> torch.Tensor:
    """Linear extrapolation from the unconditional toward the conditional
    estimate; exact at the endpoints."""
    if uncond.shape != cond.shape:
        raise SamplerError("branch shapes disagree")
    if weight == 0.0:
        return uncond
    if weight == 1.0:
        return cond
    return uncond + weight * (cond - uncond)


def impute(x0_hat: torch.Tensor, signal: torch.Tensor, mask: torch.Tensor,
           t: int, stop_step: int) -> torch.Tensor:
    """Replace observed entries of the clean estimate while t > stop_step."""
    if t <= stop_step:
        return x0_hat
    return mask * signal + (1.0 - mask) * x0_hat


def reconstruction_guidance(x0_hat: torch.Tensor, x_t: torch.Tensor | None,
                            signal: torch.Tensor, mask: torch.Tensor, t: int,
                            weight: float, schedule: NoiseSchedule,
                            mode: str = "exact_backprop") -> torch.Tensor:
    """Pull the clean estimate toward consistency with the observations.

    ``exact_backprop`` differentiates the observed-entry squared error through
    the network (x0_hat must be connected to the x_t leaf) and adjusts only
    the unobserved entries, leaving observed ones untouched. ``surrogate``
    skips the network Jacobian; the resulting gradient lives on the observed
    entries, so it acts as a soft pull of those entries toward the signal.
    """
    if weight == 0.0:
        return x0_hat.detach() if x0_hat.requires_grad else x0_hat
    schedule.check_step(t)
    coef = weight * float(np.sqrt(schedule.alpha_bar[t])) / 2.0
    if mode == "exact_backprop":
        if x_t is None or not x_t.requires_grad:
            raise SamplerError("exact_backprop needs a differentiable noisy sample")
        loss = ((signal - x0_hat) * mask).pow(2).sum()
        (grad,) = torch.autograd.grad(loss, x_t)
        if not torch.isfinite(grad).all():
            raise SamplerError(f"non-finite guidance gradient at step {t}")
        guided = x0_hat.detach() - coef * grad
        return mask * x0_hat.detach() + (1.0 - mask) * guided
    if mode == "surrogate":
        x0 = x0_hat.detach() if x0_hat.requires_grad else x0_hat
        grad = 2.0 * (x0 - signal) * mask
        return x0 - coef * grad
    raise SamplerError(f"unknown gradient mode {mode!r}")


@dataclass
class SampleResult:
    sequences: list[MotionSequence]      # denormalized, global-root
    normalized: np.ndarray               # [B, N, F] raw loop output
    denoiser_evals: int
    branches: int
    wall_ms: float
    config: SamplerConfig


def sample(config: SamplerConfig, prompt: str | None, obs: ObservationSpec,
           length: int, checkpoint: LoadedCheckpoint,
           encoder: TextEncoder | None = None) -> SampleResult:
    """Generate one sequence; observation values are in world units."""
    res = sample_batch(config, [prompt], [obs], [length], checkpoint, encoder)
    return res


def sample_batch(config: SamplerConfig, prompts: list[str | None],
                 observations: list[ObservationSpec], lengths: list[int],
                 checkpoint: LoadedCheckpoint,
                 encoder: TextEncoder | None = None) -> SampleResult:
    model_cfg = checkpoint.config
    N = model_cfg.max_frames
    F = model_cfg.feature_width
    B = len(prompts)
    if not (B == len(observations) == len(lengths)):
        raise SamplerError("prompts, observations and lengths must align")
    for L in lengths:
        if not 1 <= L <= N:
            raise SamplerError(f"length {L} outside [1, {N}]")
    if config.strategy == "conditional" and model_cfg.input_mode != "masked":
        raise SamplerError(
            "conditional sampling needs a checkpoint trained with mask input channels")

    stats = checkpoint.stats
    schedule = checkpoint.schedule
    encoder = encoder or HashedBagOfTokens(model_cfg.embed_width)
    model = checkpoint.state.ema_model()

    signal = np.zeros((B, N, F), dtype=np.float32)
    mask = np.zeros((B, N, F), dtype=np.float32)
    for b, o in enumerate(observations):
        if o.mask.shape != (N, F):
            raise SamplerError(
                f"observation {b} has shape {o.mask.shape}, expected {(N, F)}")
        if o.mask[lengths[b]:].any():
            raise SamplerError(f"observation {b} marks frames beyond its length")
        mask[b] = o.mask
        signal[b] = ((o.signal - stats.mean) / stats.std) * o.mask
    use_obs = config.strategy != "unconditioned" and mask.any()

    sig_t = torch.from_numpy(signal)
    mask_t = torch.from_numpy(mask)
    zero_mask = torch.zeros_like(mask_t)

    embeddings = [encoder.encode(p) for p in prompts]
    vec, nulls = batch_text_tensors(embeddings, encoder.width)
    null_vec, null_flags = batch_text_tensors(
        [encoder.encode(None)] * B, encoder.width)
    all_null = bool(nulls.all())
    branches = 1 if all_null else 2

    T = schedule.num_steps
    gen = torch.Generator().manual_seed(config.seed)
    coefs = [posterior_mean_coefficients(t, schedule) for t in range(1, T + 1)]
    sigmas = [float(np.sqrt(posterior_variance(t, schedule))) for t in range(1, T + 1)]

    needs_grad = (config.strategy == "imputation_guidance"
                  and config.gradient_mode == "exact_backprop" and use_obs
                  and config.reconstruction_weight > 0)
    evals = 0
    started = time.perf_counter()
    x = torch.randn(B, N, F, generator=gen)

    def estimate(inp: torch.Tensor, t: int) -> torch.Tensor:
        nonlocal evals
        tt = torch.full((B,), t, dtype=torch.long)
        if all_null:
            evals += 1
            return model(inp, tt, null_vec, null_flags)
        uncond = model(inp, tt, null_vec, null_flags)
        cond = model(inp, tt, vec, nulls)
        evals += 2
        return cfg_combine(uncond, cond, config.cfg_weight)

    for t in range(T, 0, -1):
        z = torch.randn(B, N, F, generator=gen) if t > 1 else torch.zeros(B, N, F)
        c_clean, c_noisy = coefs[t - 1]
        if config.strategy == "conditional":
            x_rep = mask_t * sig_t + (1.0 - mask_t) * x if use_obs else x
            inp = torch.cat([x_rep, mask_t], dim=2)
            with torch.no_grad():
                x0_hat = estimate(inp, t)
            x = c_clean * x0_hat + c_noisy * x_rep + sigmas[t - 1] * z
        else:
            x_leaf = x.detach().requires_grad_(True) if needs_grad else x
            inp = x_leaf
            if model_cfg.input_mode == "masked":
                inp = torch.cat([x_leaf, zero_mask], dim=2)
            with torch.enable_grad() if needs_grad else torch.no_grad():
                x0_hat = estimate(inp, t)
            if config.strategy == "imputation_guidance" and use_obs:
                x0_hat = reconstruction_guidance(
                    x0_hat, x_leaf if needs_grad else None, sig_t, mask_t, t,
                    config.reconstruction_weight, schedule, config.gradient_mode)
            if config.strategy in ("imputation", "imputation_guidance") and use_obs:
                x0_hat = impute(x0_hat, sig_t, mask_t, t, config.stop_step)
            x0_hat = x0_hat.detach()
            x = c_clean * x0_hat + c_noisy * x.detach() + sigmas[t - 1] * z
        if not torch.isfinite(x).all():
            raise SamplerError(f"non-finite sampler state at step {t}")

    wall_ms = (time.perf_counter() - started) * 1000.0
    normalized = x.numpy().astype(np.float32)
    sequences = []
    for b in range(B):
        feats = denormalize_array(normalized[b], stats).astype(np.float32)
        feats[lengths[b]:] = 0.0
        sequences.append(MotionSequence(
            data=feats, fps=checkpoint.fps, valid_length=lengths[b],
            convention=Convention.GLOBAL_ROOT, layout=checkpoint.layout))
    return SampleResult(sequences=sequences, normalized=normalized,
                        denoiser_evals=evals, branches=branches,
                        wall_ms=wall_ms, config=config)
