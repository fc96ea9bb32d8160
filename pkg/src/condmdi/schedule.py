"""Noise schedule and the closed-form diffusion quantities.

All schedule arrays are precomputed at double precision. Step indices are
1-based (``t`` in [1, T]); ``alpha_bar(0) == 1`` so the step from t=1
degenerates to the clean estimate.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass

import numpy as np

DEGENERATE_EPS = 1e-12


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseSchedule:
    beta: np.ndarray       # [T], beta[t-1] is the step-t variance increment
    alpha: np.ndarray      # [T], 1 - beta
    alpha_bar: np.ndarray  # [T+1], cumulative product with alpha_bar[0] = 1
    sigma: np.ndarray      # [T], posterior std, sigma[0] = 0

    def __post_init__(self):
        T = self.num_steps
        if T < 1:
            raise ScheduleError("schedule needs at least one step")
        if self.alpha_bar.shape != (T + 1,) or self.sigma.shape != (T,):
            raise ScheduleError("schedule array widths disagree")
        if np.any(self.beta <= 0) or np.any(self.beta >= 1):
            raise ScheduleError("beta must lie strictly in (0, 1)")
        if np.any(np.diff(self.alpha_bar) >= 0):
            raise ScheduleError("alpha_bar must be strictly decreasing")

    @property
    def num_steps(self) -> int:
        return self.beta.shape[0]

    def check_step(self, t: int):
        if not 1 <= t <= self.num_steps:
            raise ScheduleError(f"step {t} out of range [1, {self.num_steps}]")

    def to_dict(self) -> dict:
        return {"beta": self.beta.tolist()}

    @classmethod
    def from_betas(cls, beta: np.ndarray) -> "NoiseSchedule":
        beta = np.asarray(beta, dtype=np.float64)
        alpha = 1.0 - beta
        alpha_bar = np.concatenate([[1.0], np.cumprod(alpha)])
        T = beta.shape[0]
        var = np.array([posterior_variance_from(beta, alpha_bar, t)
                        for t in range(1, T + 1)])
        return cls(beta=beta, alpha=alpha, alpha_bar=alpha_bar,
                   sigma=np.sqrt(var))

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def dump_csv(self) -> str:
        """CSV audit dump with one row per step: t, beta, alpha_bar, sigma."""
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["t", "beta", "alpha_bar", "sigma"])
        for t in range(1, self.num_steps + 1):
            w.writerow([t, repr(float(self.beta[t - 1])),
                        repr(float(self.alpha_bar[t])),
                        repr(float(self.sigma[t - 1]))])
        return buf.getvalue()


def cosine_schedule(num_steps: int, offset: float = 0.008,
                    max_beta: float = 0.999) -> NoiseSchedule:
    """Squared-cosine noise level curve with the usual small-t offset.

    alpha_bar follows f(t)/f(0) with f(t) = cos^2(((t/T + s)/(1 + s)) * pi/2);
    per-step beta is clipped at ``max_beta`` and alpha_bar re-derived as the
    running product so the definitional identity holds exactly.
    """
    if num_steps < 1:
        raise ScheduleError("num_steps must be >= 1")
    T = num_steps

    def f(t: float) -> float:
        return math.cos(((t / T + offset) / (1 + offset)) * math.pi / 2) ** 2

    f0 = f(0)
    raw = np.array([f(t) / f0 for t in range(T + 1)])
    beta = np.minimum(1.0 - raw[1:] / raw[:-1], max_beta)
    return NoiseSchedule.from_betas(beta)


def q_sample(x0: np.ndarray, t: int, eps: np.ndarray,
             schedule: NoiseSchedule) -> np.ndarray:
    """Forward noising: sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps."""
    schedule.check_step(t)
    if x0.shape != eps.shape:
        raise ScheduleError(f"x0 {x0.shape} and eps {eps.shape} disagree")
    ab = schedule.alpha_bar[t]
    return math.sqrt(ab) * x0 + math.sqrt(1.0 - ab) * eps


def posterior_mean_coefficients(t: int, schedule: NoiseSchedule) -> tuple[float, float]:
    """Coefficients (on the clean estimate, on the noisy sample) of the
    reverse-step mean."""
    schedule.check_step(t)
    ab_t = schedule.alpha_bar[t]
    ab_prev = schedule.alpha_bar[t - 1]
    denom = 1.0 - ab_t
    if denom < DEGENERATE_EPS:
        raise ScheduleError(f"degenerate step t={t}: 1 - alpha_bar below {DEGENERATE_EPS}")
    c_clean = math.sqrt(ab_prev) * schedule.beta[t - 1] / denom
    c_noisy = math.sqrt(schedule.alpha[t - 1]) * (1.0 - ab_prev) / denom
    return c_clean, c_noisy


def posterior_mean(x0_hat: np.ndarray, x_t: np.ndarray, t: int,
                   schedule: NoiseSchedule) -> np.ndarray:
    c_clean, c_noisy = posterior_mean_coefficients(t, schedule)
    return c_clean * x0_hat + c_noisy * x_t


def posterior_variance_from(beta: np.ndarray, alpha_bar: np.ndarray, t: int) -> float:
    denom = 1.0 - alpha_bar[t]
    if denom < DEGENERATE_EPS:
        raise ScheduleError(f"degenerate step t={t}")
    return (1.0 - alpha_bar[t - 1]) / denom * beta[t - 1]


def posterior_variance(t: int, schedule: NoiseSchedule) -> float:
    schedule.check_step(t)
    return posterior_variance_from(schedule.beta, schedule.alpha_bar, t)
