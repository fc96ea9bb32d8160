"""Sample-estimating denoiser: a 1D temporal UNet with adaptive group norm.

The network consumes the masked sample concatenated with its observation mask
(2F channels) and predicts the clean sample (F channels). Group statistics are
computed per frame so a perturbation cannot leak outside the convolutional
receptive field. Timestep and text embeddings are summed into one conditioning
vector that drives the per-block scale/shift.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import torch
from torch import nn

from .text import TextEmbedding


class DenoiserError(RuntimeError):
    pass


@dataclass(frozen=True)
class DenoiserConfig:
    feature_width: int
    base_channels: int = 512
    channel_multipliers: tuple[int, ...] = (2, 2, 2, 2)
    groups: int = 8
    embed_width: int = 64
    max_frames: int = 196
    kernel_size: int = 5
    input_mode: str = "masked"  # "masked": 2F input channels; "plain": F

    def __post_init__(self):
        if not self.channel_multipliers:
            raise ValueError("channel_multipliers must be nonempty")
        if self.base_channels % self.groups:
            raise ValueError("base_channels must be divisible by groups")
        if self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd")
        if self.input_mode not in ("masked", "plain"):
            raise ValueError(f"unknown input_mode {self.input_mode!r}")

    @property
    def input_channels(self) -> int:
        return 2 * self.feature_width if self.input_mode == "masked" else self.feature_width

    @property
    def output_channels(self) -> int:
        return self.feature_width

    @property
    def levels(self) -> int:
        return len(self.channel_multipliers)

    @property
    def downsample_factor(self) -> int:
        return 2 ** (self.levels - 1)

    @property
    def cond_width(self) -> int:
        return 4 * self.base_channels

    def padded_length(self, n: int) -> int:
        f = self.downsample_factor
        return ((n + f - 1) // f) * f

    def receptive_field(self) -> int:
        """Upper bound on the temporal span (frames) one output can see."""
        k = self.kernel_size
        span = k - 1  # input conv
        for i in range(self.levels):
            scale = 2 ** i
            span += 2 * 2 * (k - 1) * scale          # two res blocks, two convs
            if i < self.levels - 1:
                span += 3 * scale                     # stride-2 k=4 downsample
        scale = self.downsample_factor
        span += 2 * 2 * (k - 1) * scale               # mid blocks
        for i in reversed(range(self.levels)):
            scale = 2 ** i
            if i < self.levels - 1:
                span += 3 * (2 * scale)               # transposed conv, coarse side
            span += 2 * 2 * (k - 1) * scale
        span += k - 1  # output conv
        return span + 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["channel_multipliers"] = list(self.channel_multipliers)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DenoiserConfig":
        d = dict(d)
        d["channel_multipliers"] = tuple(d["channel_multipliers"])
        return cls(**d)


def sinusoidal_timestep_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Sin/cos position features over log-spaced frequencies, [B, dim]."""
    if dim % 2:
        raise ValueError("embedding dim must be even")
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) *
                      torch.arange(half, dtype=torch.float64) / half)
    args = t.to(torch.float64)[:, None] * freqs[None, :]
    emb = torch.cat([torch.sin(args), torch.cos(args)], dim=-1)
    return emb.to(torch.float32)


class FrameGroupNorm(nn.Module):
    """Group normalization with statistics per temporal position."""

    def __init__(self, groups: int, channels: int, eps: float = 1e-5):
        super().__init__()
        if channels % groups:
            raise ValueError("channels must be divisible by groups")
        self.groups = groups
        self.eps = eps
        self.weight = nn.Parameter(torch.ones(channels))
        self.bias = nn.Parameter(torch.zeros(channels))

    def forward(self, x: torch.Tensor) -> torch.Tensor:  # [B, C, N]
        b, c, n = x.shape
        g = self.groups
        xg = x.view(b, g, c // g, n)
        mean = xg.mean(dim=2, keepdim=True)
        var = xg.var(dim=2, keepdim=True, unbiased=False)
        xg = (xg - mean) / torch.sqrt(var + self.eps)
        x = xg.view(b, c, n)
        return x * self.weight[None, :, None] + self.bias[None, :, None]


class ResBlock(nn.Module):
    """Conv block whose normalization is scaled and shifted by the condition."""

    def __init__(self, in_ch: int, out_ch: int, cond_width: int,
                 groups: int, kernel_size: int):
        super().__init__()
        pad = kernel_size // 2
        self.norm1 = FrameGroupNorm(groups, in_ch)
        self.conv1 = nn.Conv1d(in_ch, out_ch, kernel_size, padding=pad)
        self.norm2 = FrameGroupNorm(groups, out_ch)
        self.conv2 = nn.Conv1d(out_ch, out_ch, kernel_size, padding=pad)
        self.cond = nn.Linear(cond_width, 2 * out_ch)
        self.skip = (nn.Conv1d(in_ch, out_ch, 1)
                     if in_ch != out_ch else nn.Identity())

    def forward(self, x: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        h = self.conv1(torch.nn.functional.silu(self.norm1(x)))
        scale, shift = self.cond(cond)[:, :, None].chunk(2, dim=1)
        h = self.norm2(h) * (1 + scale) + shift
        h = self.conv2(torch.nn.functional.silu(h))
        return h + self.skip(x)


class MotionDenoiser(nn.Module):
    """UNet mapping a (masked) noisy sequence to a clean-sample estimate."""

    def __init__(self, config: DenoiserConfig):
        super().__init__()
        self.config = config
        c = config
        dims = [c.base_channels] + [c.base_channels * m for m in c.channel_multipliers]
        cw, g, k = c.cond_width, c.groups, c.kernel_size

        self.time_proj = nn.Sequential(
            nn.Linear(c.base_channels, cw), nn.SiLU(), nn.Linear(cw, cw))
        self.text_proj = nn.Sequential(
            nn.Linear(c.embed_width, cw), nn.SiLU(), nn.Linear(cw, cw))
        self.null_text = nn.Parameter(torch.zeros(c.embed_width))

        self.in_conv = nn.Conv1d(c.input_channels, dims[0], k, padding=k // 2)
        self.downs = nn.ModuleList()
        for i in range(c.levels):
            din, dout = dims[i], dims[i + 1]
            stage = nn.ModuleDict({
                "res1": ResBlock(din, dout, cw, g, k),
                "res2": ResBlock(dout, dout, cw, g, k),
            })
            if i < c.levels - 1:
                stage["down"] = nn.Conv1d(dout, dout, 4, stride=2, padding=1)
            self.downs.append(stage)
        self.mid1 = ResBlock(dims[-1], dims[-1], cw, g, k)
        self.mid2 = ResBlock(dims[-1], dims[-1], cw, g, k)
        self.ups = nn.ModuleList()
        for i in reversed(range(c.levels)):
            din, dout = dims[i], dims[i + 1]
            stage = nn.ModuleDict({
                "res1": ResBlock(2 * dout, din, cw, g, k),
                "res2": ResBlock(din, din, cw, g, k),
            })
            if i < c.levels - 1:
                stage["up"] = nn.ConvTranspose1d(dout, dout, 4, stride=2, padding=1)
            self.ups.append(stage)
        self.out_norm = FrameGroupNorm(g, dims[0])
        self.out_conv = nn.Conv1d(dims[0], c.output_channels, k, padding=k // 2)

    def embed_condition(self, t: torch.Tensor, text: torch.Tensor,
                        null_flags: torch.Tensor) -> torch.Tensor:
        temb = self.time_proj(
            sinusoidal_timestep_embedding(t, self.config.base_channels)
            .to(self.null_text.dtype))
        text = torch.where(null_flags[:, None], self.null_text[None, :], text)
        return temb + self.text_proj(text)

    def forward(self, x: torch.Tensor, t: torch.Tensor,
                text: torch.Tensor, null_flags: torch.Tensor) -> torch.Tensor:
        """x: [B, N, Cin] -> clean estimate [B, N, F]."""
        if x.ndim != 3 or x.shape[-1] != self.config.input_channels:
            raise DenoiserError(
                f"expected [B, N, {self.config.input_channels}] input, got {tuple(x.shape)}")
        t = torch.as_tensor(t, dtype=torch.long, device=x.device)
        if t.ndim == 0:
            t = t.expand(x.shape[0])
        n = x.shape[1]
        padded = self.config.padded_length(n)
        h = x.transpose(1, 2)  # [B, C, N]
        if padded != n:
            h = torch.nn.functional.pad(h, (0, padded - n))
        cond = self.embed_condition(t, text, null_flags)

        h = self.in_conv(h)
        skips = []
        for stage in self.downs:
            h = stage["res1"](h, cond)
            h = stage["res2"](h, cond)
            skips.append(h)
            if "down" in stage:
                h = stage["down"](h)
        h = self.mid1(h, cond)
        h = self.mid2(h, cond)
        for stage in self.ups:
            if "up" in stage:
                h = stage["up"](h)
            h = torch.cat([h, skips.pop()], dim=1)
            h = stage["res1"](h, cond)
            h = stage["res2"](h, cond)
        h = self.out_conv(torch.nn.functional.silu(self.out_norm(h)))
        out = h.transpose(1, 2)[:, :n, :]
        if not torch.isfinite(out).all():
            raise DenoiserError("non-finite activations in denoiser output")
        return out

    def parameter_dict(self) -> dict[str, torch.Tensor]:
        return {k: v.detach().clone() for k, v in self.state_dict().items()}

    def load_parameter_dict(self, params: dict[str, torch.Tensor]):
        self.load_state_dict(params)


def batch_text_tensors(embeddings: list[TextEmbedding],
                       width: int) -> tuple[torch.Tensor, torch.Tensor]:
    """Stack embeddings into ([B, width] vectors, [B] null flags)."""
    vecs = torch.zeros(len(embeddings), width)
    nulls = torch.zeros(len(embeddings), dtype=torch.bool)
    for i, e in enumerate(embeddings):
        if e.null:
            nulls[i] = True
        else:
            if e.vector.shape[0] != width:
                raise DenoiserError(
                    f"text embedding width {e.vector.shape[0]} != {width}")
            vecs[i] = torch.from_numpy(e.vector)
    return vecs, nulls


@dataclass
class DenoiserState:
    """Trainable parameters plus their exponential-moving-average shadow."""

    model: MotionDenoiser
    ema: dict[str, torch.Tensor] = field(default_factory=dict)
    step: int = 0

    def __post_init__(self):
        if not self.ema:
            self.ema = self.model.parameter_dict()
        model_keys = set(self.model.state_dict())
        if set(self.ema) != model_keys:
            raise ValueError("EMA shadow keys do not match model parameters")

    def ema_model(self) -> MotionDenoiser:
        m = MotionDenoiser(self.model.config)
        m.load_state_dict(self.ema)
        m.eval()
        return m
