"""The full generative model: encoder, RBM prior, decoder, and the loss.

The training objective is the negative rebalanced ELBO

    loss = -E_q[log p(x | zeta)] + beta * KL(q(z|x) || p(z))

with a single zeta sample per datum, teacher forcing for the
reconstruction expectation, and the KL computed in closed form against
the RBM (log Z enters only through its gradient during training).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .decoder import DecoderConfig, SmilesDecoder
from .encoder import EncoderConfig, SmilesEncoder
from .latent import SpikeExpConfig, kl_term, sample_zeta
from .nn.tensor import Tensor
from .rbm import Rbm
from . import nn


@dataclass
class ModelConfig:
    vocab_size: int
    d_emb: int = 32
    d_model: int = 160
    n_enc_layers: int = 5
    n_dec_layers: int = 5
    d_ff: int = 320
    n_heads: int = 10
    dropout: float = 0.1
    max_len: int = 202
    n_visible: int = 128
    n_hidden: int = 128
    beta_se: float = 10.0
    rbm_weight_scale: float = 0.01
    dtype: object = field(default=np.float64, repr=False)

    @property
    def n_latent(self) -> int:
        return self.n_visible + self.n_hidden


class DvaeModel:
    """Parameter container tying the three trainable pieces together."""

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.encoder = SmilesEncoder(
            EncoderConfig(
                vocab_size=cfg.vocab_size, d_emb=cfg.d_emb, d_model=cfg.d_model,
                n_layers=cfg.n_enc_layers, d_ff=cfg.d_ff, n_heads=cfg.n_heads,
                dropout=cfg.dropout, max_len=cfg.max_len, n_latent=cfg.n_latent,
                dtype=cfg.dtype,
            ),
            rng,
        )
        self.decoder = SmilesDecoder(
            DecoderConfig(
                vocab_size=cfg.vocab_size, d_model=cfg.d_model,
                n_layers=cfg.n_dec_layers, d_ff=cfg.d_ff, n_heads=cfg.n_heads,
                dropout=cfg.dropout, max_len=cfg.max_len, n_latent=cfg.n_latent,
                dtype=cfg.dtype,
            ),
            rng,
        )
        self.rbm = Rbm(cfg.n_visible, cfg.n_hidden, rng,
                       weight_scale=cfg.rbm_weight_scale, dtype=cfg.dtype)
        self.spike_exp = SpikeExpConfig(beta_se=cfg.beta_se)

    def named_params(self) -> dict[str, Tensor]:
        out = self.encoder.named_params("encoder.")
        out.update(self.decoder.named_params("decoder."))
        out.update(self.rbm.named_params("rbm."))
        return out

    def zero_grad(self) -> None:
        for p in self.named_params().values():
            p.zero_grad()

    def posterior(self, ids: np.ndarray, lengths: np.ndarray,
                  train: bool = False, rng: np.random.Generator | None = None) -> Tensor:
        """Clamped posterior probabilities q for a framed id batch."""
        logits = self.encoder(ids, lengths, train, rng)
        return logits.sigmoid().clamp_probs()


def elbo_loss(model: DvaeModel, ids: np.ndarray, lengths: np.ndarray, *,
              beta: float = 0.1,
              rho: np.ndarray | None = None,
              zeta_rng: np.random.Generator | None = None,
              neg_samples: np.ndarray | None = None,
              neg_weights: np.ndarray | None = None,
              logz_value: float | None = None,
              train: bool = False,
              dropout_rng: np.random.Generator | None = None
              ) -> tuple[Tensor, dict[str, float]]:
    """Negative ELBO for one batch; returns (loss, detached parts).

    ``rho`` (explicit uniforms) or ``zeta_rng`` drives the zeta draw.
    ``neg_samples`` feeds the KL's log-Z gradient surrogate; training
    passes sampler draws, oracle tests pass exact enumerations with
    ``neg_weights``.  ``logz_value`` only shifts the reported KL value.
    """
    q = model.posterior(ids, lengths, train, dropout_rng)
    if rho is None:
        if zeta_rng is None:
            raise ValueError("need rho or zeta_rng for the zeta draw")
        rho = zeta_rng.random(q.shape)
    zs = sample_zeta(q, rho, model.spike_exp)
    memory = model.decoder.latent_to_memory(zs.zeta)
    _, recon, _ = model.decoder.decode_teacher_forced(ids, memory, train, dropout_rng)
    kl = kl_term(q, model.rbm, neg_samples, logz_value=logz_value, neg_weights=neg_weights)
    loss = recon + float(beta) * kl
    parts = {"recon": recon.item(), "kl": kl.item(), "total": recon.item() + beta * kl.item()}
    return loss, parts


def frame_batch(token_ids: list[list[int]], pad_to: int | None = None
                ) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad framed id sequences into (ids, lengths) arrays."""
    lengths = np.array([len(s) for s in token_ids], dtype=np.int64)
    width = int(lengths.max()) if pad_to is None else pad_to
    ids = np.zeros((len(token_ids), width), dtype=np.int64)
    for k, seq in enumerate(token_ids):
        ids[k, :len(seq)] = seq
    return ids, lengths


def init_model(cfg: ModelConfig, seed: int) -> DvaeModel:
    return DvaeModel(cfg, nn.stream(seed, nn.rngkeys.INIT))
