"""Conditional transformer decoder over the continuous latent.

The 256-float zeta vector is projected to a 16-slot memory bank
(mirroring the encoder's 16 pooling slots); every decoder layer
cross-attends to it.  Training mode is teacher-forced with a causal
mask; inference decodes autoregressively from BOS with greedy or
temperature-controlled multinomial selection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn.layers import (
    Embedding,
    LayerNorm,
    Linear,
    Module,
    TransformerDecoderLayer,
    causal_mask,
    sinusoidal_encoding,
)
from .nn.tensor import Tensor, gather_last, no_grad
from .encoder import N_POOL_SLOTS, SequenceTooLong, TokenOutOfRange
from .smiles.tokenizer import BOS, EOS, PAD


@dataclass
class DecoderConfig:
    vocab_size: int
    d_model: int = 160
    n_layers: int = 5
    d_ff: int = 320
    n_heads: int = 10
    dropout: float = 0.1
    max_len: int = 202
    n_latent: int = 256
    n_memory: int = N_POOL_SLOTS
    dtype: object = field(default=np.float64, repr=False)


class SmilesDecoder(Module):
    def __init__(self, cfg: DecoderConfig, rng: np.random.Generator):
        self.cfg = cfg
        dt = cfg.dtype
        self.embedding = Embedding(cfg.vocab_size, cfg.d_model, rng, dt)
        self.pe = sinusoidal_encoding(cfg.max_len, cfg.d_model, dt)
        self.mem_proj = Linear(cfg.n_latent, cfg.n_memory * cfg.d_model, rng, dt)
        self.mem_norm = LayerNorm(cfg.d_model, dt)
        self.layers = [
            TransformerDecoderLayer(cfg.d_model, cfg.d_ff, cfg.n_heads, rng, dt, rate=cfg.dropout)
            for _ in range(cfg.n_layers)
        ]
        self.final_norm = LayerNorm(cfg.d_model, dt)
        self.out = Linear(cfg.d_model, cfg.vocab_size, rng, dt)

    def latent_to_memory(self, zeta: Tensor) -> Tensor:
        """(B, n_latent) -> (B, 16, d_model), layer-normalized per slot."""
        b = zeta.shape[0]
        mem = self.mem_proj(zeta).reshape(b, self.cfg.n_memory, self.cfg.d_model)
        return self.mem_norm(mem)

    def _embed(self, ids: np.ndarray) -> Tensor:
        ids = np.asarray(ids)
        seq = ids.shape[-1]
        if seq > self.cfg.max_len:
            raise SequenceTooLong(f"sequence of {seq} > max_len {self.cfg.max_len}")
        if np.any(ids < 0) or np.any(ids >= self.cfg.vocab_size):
            raise TokenOutOfRange("token id outside the vocabulary")
        scale = np.sqrt(self.cfg.d_model)
        return self.embedding(ids) * scale + Tensor(self.pe[:seq] / scale)

    def forward_logits(self, ids_in: np.ndarray, memory: Tensor,
                       train: bool = False, rng: np.random.Generator | None = None) -> Tensor:
        """Logits over the vocabulary at every input position."""
        x = self._embed(ids_in)
        mask = causal_mask(x.shape[1], dtype=x.dtype)
        for layer in self.layers:
            x = layer(x, memory, mask, train, rng)
        return self.out(self.final_norm(x))

    def decode_teacher_forced(self, framed_ids: np.ndarray, memory: Tensor,
                              train: bool = False,
                              rng: np.random.Generator | None = None
                              ) -> tuple[Tensor, Tensor, np.ndarray]:
        """Shift-by-one teacher forcing on framed (BOS...EOS+pad) batches.

        Returns (per-position logits, batch-mean summed cross-entropy,
        target mask).  Pad targets are excluded from the loss.
        """
        ids_in = framed_ids[:, :-1]
        targets = framed_ids[:, 1:]
        logits = self.forward_logits(ids_in, memory, train, rng)
        logp = logits.log_softmax(axis=-1)
        picked = gather_last(logp, targets)
        mask = (targets != PAD).astype(logits.dtype)
        loss = -(picked * Tensor(mask)).sum(axis=-1).mean()
        return logits, loss, mask

    def decode_sample(self, memory: Tensor, max_len: int = 200,
                      mode: str = "greedy", temperature: float = 1.0,
                      rngs: list[np.random.Generator] | None = None) -> list[list[int]]:
        """Autoregressive decoding from BOS for a batch of memories.

        Emits until EOS or ``max_len`` tokens per sequence.  ``rngs``
        supplies one stream per sequence for multinomial mode, which
        keeps each molecule's draw independent of batch composition.
        """
        if mode not in ("greedy", "multinomial"):
            raise ValueError(f"unknown decode mode {mode!r}")
        b = memory.shape[0]
        if mode == "multinomial":
            if rngs is None or len(rngs) != b:
                raise ValueError("multinomial mode needs one rng per sequence")
        ids = np.full((b, 1), BOS, dtype=np.int64)
        done = np.zeros(b, dtype=bool)
        with no_grad():
            for _ in range(max_len):
                logits = self.forward_logits(ids, memory).data[:, -1, :]
                if mode == "greedy":
                    nxt = logits.argmax(axis=-1)
                else:
                    z = logits / max(temperature, 1e-8)
                    z = z - z.max(axis=-1, keepdims=True)
                    probs = np.exp(z)
                    probs /= probs.sum(axis=-1, keepdims=True)
                    nxt = np.array([
                        0 if done[i] else rngs[i].choice(probs.shape[1], p=probs[i])
                        for i in range(b)
                    ])
                nxt = np.where(done, PAD, nxt)
                ids = np.concatenate([ids, nxt[:, None]], axis=1)
                done |= nxt == EOS
                if done.all():
                    break
        out = []
        for row in ids:
            seq = []
            for t in row[1:]:
                if t == EOS:
                    break
                seq.append(int(t))
            out.append(seq)
        return out
