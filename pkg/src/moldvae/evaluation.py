"""Annealed importance sampling for log Z and per-epoch loss records.

AIS anneals from the uniform (zero-parameter) RBM, whose log Z is
N*ln 2 exactly, through K geometrically spaced tempered distributions
E_k = beta_k * E with beta_k = k/(K+1), to the target.  Each chain
accumulates a log importance weight across levels; the estimate is
log Z0 + log-mean-exp of the weights, with a delta-method standard
error from the weight variance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .nn import rngkeys, stream
from .rbm import Rbm, energy, gibbs_sweep

METRICS_FORMAT_LINE = "# moldvae-metrics 1"
METRICS_COLUMNS = ("epoch", "split", "total", "recon", "kl", "logz", "lr", "seconds")


@dataclass
class AisConfig:
    n_intermediate: int = 10
    n_samples: int = 500
    gibbs_sweeps_per_level: int = 1

    def __post_init__(self):
        if self.n_intermediate < 1:
            raise ValueError("need at least one intermediate distribution")
        if self.n_samples < 2:
            raise ValueError("need at least two AIS samples")


def ais_logz(rbm: Rbm, cfg: AisConfig, seed: int, epoch: int = 0) -> tuple[float, float]:
    """Estimate log Z of the RBM; returns (estimate, stderr)."""
    rng = stream(seed, rngkeys.AIS, epoch)
    n = cfg.n_samples
    n_units = rbm.n_units
    log_z0 = n_units * np.log(2.0)

    betas = np.arange(1, cfg.n_intermediate + 1) / (cfg.n_intermediate + 1.0)
    z = (rng.random((n, n_units)) < 0.5).astype(np.float64)  # exact base draw
    log_w = np.zeros(n)
    prev_beta = 0.0
    for beta in betas:
        log_w += (beta - prev_beta) * (-energy(rbm, z))
        for _ in range(cfg.gibbs_sweeps_per_level):
            z = gibbs_sweep(rbm, z, rng, temper=beta)
        prev_beta = beta
    log_w += (1.0 - prev_beta) * (-energy(rbm, z))

    estimate = float(log_z0 + logsumexp(log_w) - np.log(n))
    # delta method on the mean of w = exp(log_w), max-subtracted for stability
    m = log_w.max()
    u = np.exp(log_w - m)
    mean_u = u.mean()
    stderr = float(u.std(ddof=1) / (np.sqrt(n) * mean_u)) if mean_u > 0 else float("inf")
    return estimate, stderr


@dataclass
class EpochRecord:
    epoch: int
    split: str
    total: float
    recon: float
    kl: float
    logz: float
    lr: float
    seconds: float

    def row(self) -> list[str]:
        return [str(self.epoch), self.split,
                repr(self.total), repr(self.recon), repr(self.kl),
                repr(self.logz), repr(self.lr), repr(self.seconds)]


class MetricsLog:
    """CSV metrics file, one row per (epoch, split)."""

    def __init__(self, path, append: bool = False):
        self.path = path
        if not append:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                fh.write(METRICS_FORMAT_LINE + "\n")
                csv.writer(fh).writerow(METRICS_COLUMNS)

    def append(self, record: EpochRecord) -> None:
        with open(self.path, "a", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerow(record.row())


def evaluate_split(model, encoded: list[list[int]], *, beta: float, logz: float,
                   seed: int, epoch: int, batch_size: int = 32) -> dict[str, float]:
    """Mean loss parts over a corpus split, eval mode (dropout off).

    ``encoded`` holds framed token-id sequences.  Zeta draws come from a
    keyed stream of (seed, epoch, batch), so two evaluations with the
    same seed and parameters agree exactly.
    """
    from .model import elbo_loss, frame_batch
    from .nn.tensor import no_grad
    from .smiles.dataset import EmptyCorpus

    if not encoded:
        raise EmptyCorpus("evaluation corpus is empty")
    order = sorted(range(len(encoded)), key=lambda i: len(encoded[i]))
    recon_sum = 0.0
    kl_sum = 0.0
    count = 0
    with no_grad():
        for b, lo in enumerate(range(0, len(order), batch_size)):
            chunk = [encoded[i] for i in order[lo:lo + batch_size]]
            ids, lengths = frame_batch(chunk)
            rng = stream(seed, rngkeys.EVAL, epoch, b)
            _, parts = elbo_loss(model, ids, lengths, beta=beta,
                                 zeta_rng=rng, neg_samples=None,
                                 logz_value=logz, train=False)
            recon_sum += parts["recon"] * len(chunk)
            kl_sum += parts["kl"] * len(chunk)
            count += len(chunk)
    recon = recon_sum / count
    kl = kl_sum / count
    return {"recon": recon, "kl": kl, "total": recon + beta * kl}


def evaluate_epoch(model, encoded: list[list[int]], *, beta: float,
                   ais_cfg: AisConfig, seed: int, epoch: int, split: str = "valid",
                   lr: float = 0.0, seconds: float = 0.0,
                   batch_size: int = 32) -> EpochRecord:
    """One metrics row: AIS log Z plus mean ELBO parts over the split."""
    logz, _ = ais_logz(model.rbm, ais_cfg, seed + epoch)
    parts = evaluate_split(model, encoded, beta=beta, logz=logz,
                           seed=seed, epoch=epoch, batch_size=batch_size)
    return EpochRecord(epoch=epoch, split=split, total=parts["total"],
                       recon=parts["recon"], kl=parts["kl"], logz=logz,
                       lr=lr, seconds=seconds)


def read_metrics(path) -> list[EpochRecord]:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if first != METRICS_FORMAT_LINE:
            raise ValueError(f"{path}: unexpected metrics format line {first!r}")
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != METRICS_COLUMNS:
        raise ValueError(f"{path}: missing metrics header")
    out = []
    for r in rows[1:]:
        out.append(EpochRecord(int(r[0]), r[1], float(r[2]), float(r[3]),
                               float(r[4]), float(r[5]), float(r[6]), float(r[7])))
    return out
