"""Spike-and-exponential latent relaxation and the KL term of the loss.

The posterior q over 256 binary units is factorized Bernoulli.  Each unit
is smoothed into a continuous zeta in [0, 1] by inverse-CDF sampling of
the mixture

    r(zeta) = (1 - q) * delta(zeta) + q * beta_se * exp(beta_se*zeta) / (exp(beta_se) - 1)

which is differentiable in q wherever the draw lands on the exponential
branch, so the reparameterization trick applies.

The KL divergence to the RBM prior decomposes exactly under factorized q:

    KL(q || p) = sum_i [q log q + (1-q) log(1-q)] + E_q[E(z)] + log Z

E_q[E] is multilinear in q and computed in closed form.  log Z is never
evaluated during training; its theta-gradient is estimated from negative
samples, and AIS supplies the constant at evaluation time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn.tensor import Tensor
from .rbm import Rbm, SamplerEmpty, energy_tensor

Q_EPS = 1e-7


@dataclass
class SpikeExpConfig:
    """Sharpness of the exponential mixture component."""

    beta_se: float = 10.0

    def __post_init__(self):
        if not np.isfinite(self.beta_se) or self.beta_se <= 0:
            raise ValueError("beta_se must be finite and positive")


@dataclass
class ZetaSample:
    zeta: Tensor          # (batch, units) in [0, 1]
    rho: np.ndarray       # the uniform draws that produced it


def sample_zeta(q: Tensor, rho: np.ndarray, cfg: SpikeExpConfig) -> ZetaSample:
    """Reparameterized draw of zeta given posterior probabilities q.

    zeta_i = 0 when rho_i <= 1 - q_i (the spike), otherwise the inverse
    CDF of the truncated exponential.  The returned Tensor carries the
    gradient d(zeta)/dq on the exponential branch.
    """
    qa = q.data
    rho = np.asarray(rho, dtype=qa.dtype)
    if rho.shape != qa.shape:
        raise ValueError(f"rho shape {rho.shape} != q shape {qa.shape}")
    beta = qa.dtype.type(cfg.beta_se)
    expm = np.expm1(beta)                      # e^beta - 1
    active = rho > 1.0 - qa
    u = np.where(active, (rho - (1.0 - qa)) / qa, 0.0)
    zeta_data = np.where(active, np.log1p(u * expm) / beta, 0.0)
    out = Tensor(zeta_data)

    def grad(g):
        dz_dq = np.where(
            active,
            expm * (1.0 - rho) / (beta * (1.0 + u * expm) * qa * qa),
            0.0,
        )
        return g * dz_dq

    out._record((q,), (grad,))
    return ZetaSample(zeta=out, rho=rho)


def zeta_mean(q: float, beta_se: float) -> float:
    """Analytic E[zeta] for scalar q (spike mass at 0 plus exponential mean)."""
    b = beta_se
    return q * (np.exp(b) * (b - 1.0) + 1.0) / (b * np.expm1(b))


def bernoulli_entropy_neg(q: Tensor) -> Tensor:
    """sum_i q log q + (1-q) log(1-q) per row (negative entropy)."""
    qc = q.clamp_probs(Q_EPS)
    return (qc * qc.log() + (1.0 - qc) * (1.0 - qc).log()).sum(axis=-1)


def mean_field_energy(q: Tensor, rbm: Rbm) -> Tensor:
    """E_q[E(z)] for factorized q; exact by multilinearity of the energy."""
    qv = q[:, : rbm.n_visible]
    qh = q[:, rbm.n_visible:]
    return -(qv @ rbm.a) - (qh @ rbm.b) - ((qv @ rbm.W) * qh).sum(axis=-1)


def kl_term(q: Tensor, rbm: Rbm, neg_samples: np.ndarray | None,
            logz_value: float | None = None,
            neg_weights: np.ndarray | None = None) -> Tensor:
    """Batch-mean KL(q || p_theta) as an autodiff scalar.

    The value equals negative entropy + mean-field energy + logz_value
    (0 when no estimate is supplied).  Negative samples contribute a
    zero-valued surrogate whose theta-gradient is the stochastic
    -E_p[dE/dtheta] term of d(log Z)/dtheta; with ``neg_weights`` set to
    exact state probabilities the gradient becomes exact.
    """
    total = (bernoulli_entropy_neg(q) + mean_field_energy(q, rbm)).mean()
    if neg_samples is not None:
        neg_samples = np.asarray(neg_samples)
        if neg_samples.shape[0] == 0:
            raise SamplerEmpty("negative phase received no samples")
        e_neg = energy_tensor(rbm, neg_samples)
        if neg_weights is None:
            surrogate = -e_neg.mean()
        else:
            w = np.asarray(neg_weights, dtype=e_neg.dtype)
            surrogate = -(e_neg * w).sum()
        # value-neutral: contributes only the gradient
        total = total + (surrogate - surrogate.item())
    if logz_value is not None:
        total = total + float(logz_value)
    return total
