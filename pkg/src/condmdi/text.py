"""Pluggable text embeddings.

The default encoder is a deterministic hashed bag of tokens: each token is
hashed into one of ``width`` buckets and the bucket-count vector is
L2-normalized. A missing prompt (``None``) yields the null embedding, which
the denoiser replaces with a learned vector.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Protocol

import numpy as np

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class TextEmbedding:
    vector: np.ndarray  # [width] float32
    null: bool = False

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.float32)
        if v.ndim != 1 or not np.isfinite(v).all():
            raise ValueError("embedding must be a finite 1-d vector")
        object.__setattr__(self, "vector", v)


class TextEncoder(Protocol):
    width: int

    def encode(self, prompt: str | None) -> TextEmbedding: ...


def token_bucket(token: str, width: int) -> int:
    h = hashlib.sha256(token.encode("utf-8")).digest()
    return int.from_bytes(h[:8], "little") % width


class HashedBagOfTokens:
    """Deterministic prompt encoder with no learned parameters."""

    def __init__(self, width: int = 64):
        if width < 1:
            raise ValueError("width must be >= 1")
        self.width = width

    def tokenize(self, prompt: str) -> list[str]:
        return _TOKEN_RE.findall(prompt.lower())

    def encode(self, prompt: str | None) -> TextEmbedding:
        if prompt is None:
            return TextEmbedding(np.zeros(self.width, dtype=np.float32), null=True)
        vec = np.zeros(self.width, dtype=np.float32)
        for tok in self.tokenize(prompt):
            vec[token_bucket(tok, self.width)] += 1.0
        norm = float(np.linalg.norm(vec))
        if norm > 0:
            vec /= norm
        return TextEmbedding(vec, null=False)
