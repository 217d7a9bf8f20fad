"""Token sequence -> 256 Bernoulli logits.

Pipeline: scaled embedding plus corrected positional encoding, a width-5
convolution into the model width with gelu and a highway layer, a stack
of pre-norm transformer encoder layers, fixed-length pooling into 16
slots, and a linear head to the latent logits.

Pooling slots, in order: position 0, the mean over all (non-pad)
positions, then for n = 2..5 and m = 0..n-1 the mean over positions
whose index (counted over non-pad positions) is congruent to m mod n.
Empty slots contribute zero vectors, so short sequences stay usable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn.layers import (
    Conv1dSame,
    Embedding,
    Highway,
    LayerNorm,
    Linear,
    Module,
    TransformerEncoderLayer,
    padding_mask,
    sinusoidal_encoding,
)
from .nn.tensor import Tensor

POOL_GROUPS = [(1, 0)] + [(n, m) for n in range(2, 6) for m in range(n)]
N_POOL_SLOTS = 2 + len(POOL_GROUPS) - 1  # position 0, global mean, S^m_n slots


class TokenOutOfRange(IndexError):
    pass


class SequenceTooLong(ValueError):
    pass


class EmptySequence(ValueError):
    pass


@dataclass
class EncoderConfig:
    vocab_size: int
    d_emb: int = 32
    d_model: int = 160
    n_layers: int = 5
    d_ff: int = 320
    n_heads: int = 10
    dropout: float = 0.1
    max_len: int = 202          # 200 symbols + BOS/EOS
    n_latent: int = 256
    conv_width: int = 5
    dtype: object = field(default=np.float64, repr=False)

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ValueError("d_model must be divisible by n_heads")

    @property
    def pooled_dim(self) -> int:
        return N_POOL_SLOTS * self.d_model


def pool_weights(lengths: np.ndarray, seq: int, dtype=np.float64) -> np.ndarray:
    """Constant (B, 16, S) weight rows implementing the pooling slots.

    ``lengths`` counts real (non-pad) positions; sequences are assumed
    left-aligned, so real indices are 0..L-1.
    """
    lengths = np.asarray(lengths)
    if np.any(lengths < 1):
        raise EmptySequence("pooling needs at least one real position")
    b = lengths.shape[0]
    w = np.zeros((b, N_POOL_SLOTS, seq), dtype=dtype)
    pos = np.arange(seq)
    for k, length in enumerate(lengths):
        real = pos < length
        w[k, 0, 0] = 1.0                       # the vector with index 0
        w[k, 1, real] = 1.0 / length           # global mean
        slot = 2
        for n, m in POOL_GROUPS[1:]:
            members = real & (pos % n == m)
            c = int(members.sum())
            if c:
                w[k, slot, members] = 1.0 / c
            slot += 1
    return w


def fixed_length_pool(x: Tensor, lengths: np.ndarray) -> Tensor:
    """Concatenate the 16 pooling slots: (B, S, D) -> (B, 16*D)."""
    b, seq, d = x.shape
    w = pool_weights(lengths, seq, dtype=x.dtype)
    pooled = Tensor(w) @ x                     # (B, 16, D)
    return pooled.reshape(b, N_POOL_SLOTS * d)


class SmilesEncoder(Module):
    def __init__(self, cfg: EncoderConfig, rng: np.random.Generator):
        self.cfg = cfg
        dt = cfg.dtype
        self.embedding = Embedding(cfg.vocab_size, cfg.d_emb, rng, dt)
        self.pe = sinusoidal_encoding(cfg.max_len, cfg.d_emb, dt)
        self.conv = Conv1dSame(cfg.d_emb, cfg.d_model, cfg.conv_width, rng, dt)
        self.highway = Highway(cfg.d_model, rng, dt)
        self.layers = [
            TransformerEncoderLayer(cfg.d_model, cfg.d_ff, cfg.n_heads, rng, dt, rate=cfg.dropout)
            for _ in range(cfg.n_layers)
        ]
        self.final_norm = LayerNorm(cfg.d_model, dt)
        self.head = Linear(cfg.pooled_dim, cfg.n_latent, rng, dt)

    def embed_with_position(self, ids: np.ndarray) -> Tensor:
        """sqrt(d_emb) * embedding + pe / sqrt(d_emb)."""
        ids = np.asarray(ids)
        seq = ids.shape[-1]
        if seq > self.cfg.max_len:
            raise SequenceTooLong(f"sequence of {seq} > max_len {self.cfg.max_len}")
        if np.any(ids < 0) or np.any(ids >= self.cfg.vocab_size):
            raise TokenOutOfRange("token id outside the vocabulary")
        scale = np.sqrt(self.cfg.d_emb)
        return self.embedding(ids) * scale + Tensor(self.pe[:seq] / scale)

    def preprocess(self, x: Tensor) -> Tensor:
        """Convolution into d_model, gelu, then the highway layer."""
        return self.highway(self.conv(x).gelu())

    def encode(self, x: Tensor, lengths: np.ndarray,
               train: bool = False, rng: np.random.Generator | None = None) -> Tensor:
        mask = padding_mask(lengths, x.shape[1], dtype=x.dtype)
        for layer in self.layers:
            x = layer(x, mask, train, rng)
        return self.final_norm(x)

    def posterior_logits(self, pooled: Tensor) -> Tensor:
        return self.head(pooled)

    def __call__(self, ids: np.ndarray, lengths: np.ndarray,
                 train: bool = False, rng: np.random.Generator | None = None) -> Tensor:
        """Framed, right-padded id matrix (B, S) -> latent logits (B, n_latent)."""
        x = self.embed_with_position(ids)
        real = (np.arange(ids.shape[1])[None, :] < np.asarray(lengths)[:, None])
        x = x * Tensor(real[:, :, None].astype(x.dtype))   # silence pad rows pre-conv
        x = self.preprocess(x)
        x = self.encode(x, lengths, train, rng)
        pooled = fixed_length_pool(x, lengths)
        return self.posterior_logits(pooled)
