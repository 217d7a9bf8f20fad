"""Restricted Boltzmann machine latent prior and its samplers.

The 256 latent units are split into a fixed visible/hidden bipartition
(first and last half).  Energy of a joint state z = (v, h):

    E(v, h) = -a.v - b.h - v.W.h,   p(z) = exp(-E(z)) / Z

Samplers share one interface (``draw(n, rng) -> (n, units) binary``):
block-Gibbs chains with persistent contrastive divergence, a classical
simulated annealer standing in for quantum-annealer reads, and exact
enumeration for oracle-sized models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .nn.tensor import Tensor


class TooLarge(ValueError):
    pass


class SamplerEmpty(ValueError):
    pass


class InvalidSchedule(ValueError):
    pass


class Rbm:
    """Bipartite binary energy model; parameters are autodiff Tensors."""

    def __init__(self, n_visible: int, n_hidden: int,
                 rng: np.random.Generator | None = None,
                 weight_scale: float = 0.01, dtype=np.float64):
        self.n_visible = n_visible
        self.n_hidden = n_hidden
        if rng is None:
            w = np.zeros((n_visible, n_hidden), dtype=dtype)
        else:
            w = (rng.standard_normal((n_visible, n_hidden)) * weight_scale).astype(dtype)
        self.a = Tensor.param(np.zeros(n_visible, dtype=dtype))
        self.b = Tensor.param(np.zeros(n_hidden, dtype=dtype))
        self.W = Tensor.param(w)

    @property
    def n_units(self) -> int:
        return self.n_visible + self.n_hidden

    def named_params(self, prefix: str = "") -> dict[str, Tensor]:
        return {f"{prefix}a": self.a, f"{prefix}b": self.b, f"{prefix}W": self.W}

    def zero_grad(self) -> None:
        for p in self.named_params().values():
            p.zero_grad()

    def split(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return z[..., :self.n_visible], z[..., self.n_visible:]


def energy(rbm: Rbm, z: np.ndarray) -> np.ndarray:
    """E(z) for a batch of binary joint states, shape (..., units)."""
    v, h = rbm.split(np.asarray(z, dtype=rbm.W.dtype))
    a, b, w = rbm.a.data, rbm.b.data, rbm.W.data
    return -(v @ a) - (h @ b) - np.einsum("...i,ij,...j->...", v, w, h)


def energy_tensor(rbm: Rbm, z: np.ndarray) -> Tensor:
    """E(z) as an autodiff expression in the RBM parameters (z constant)."""
    v, h = rbm.split(np.asarray(z, dtype=rbm.W.dtype))
    vt, ht = Tensor(v), Tensor(h)
    return -(vt @ rbm.a) - (ht @ rbm.b) - ((vt @ rbm.W) * ht).sum(axis=-1)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ez = np.exp(x[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def gibbs_sweep(rbm: Rbm, chains: np.ndarray, rng: np.random.Generator,
                temper: float = 1.0) -> np.ndarray:
    """One block sweep: resample h | v, then v | h.

    `temper` scales all parameters (used by AIS's intermediate levels).
    """
    a = rbm.a.data * temper
    b = rbm.b.data * temper
    w = rbm.W.data * temper
    v, h = rbm.split(chains.astype(w.dtype))
    ph = _sigmoid(b + v @ w)
    h = (rng.random(ph.shape) < ph).astype(w.dtype)
    pv = _sigmoid(a + h @ w.T)
    v = (rng.random(pv.shape) < pv).astype(w.dtype)
    return np.concatenate([v, h], axis=-1)


def pcd_negative_phase(rbm: Rbm, chains: np.ndarray, rng: np.random.Generator,
                       k: int = 30) -> np.ndarray:
    """Advance persistent chains k sweeps; returns the new states.

    Callers must store the result back as the persistent state (the
    chains survive across optimizer steps and are never reinitialized).
    """
    out = chains
    for _ in range(k):
        out = gibbs_sweep(rbm, out, rng)
    return out


# ---------------------------------------------------------------------------
# Ising form (the representation an annealer consumes)
# ---------------------------------------------------------------------------

@dataclass
class IsingProblem:
    """Fields/couplings over spins s in {-1,+1}; couplings live on the
    bipartite block only.  E_rbm(z) = s.J.s + h.s + offset with z=(s+1)/2."""

    h: np.ndarray            # (units,)
    j_block: np.ndarray      # (n_visible, n_hidden); J[i, nv+j] = j_block[i, j]
    offset: float
    n_visible: int

    def energy(self, s: np.ndarray) -> np.ndarray:
        sv = s[..., :self.n_visible]
        sh = s[..., self.n_visible:]
        quad = np.einsum("...i,ij,...j->...", sv, self.j_block, sh)
        return quad + s @ self.h + self.offset

    def export_text(self, path) -> None:
        """Write 'i j J' coupling lines and 'i h' field lines, 0-based."""
        nv = self.n_visible
        with open(path, "w", encoding="utf-8") as fh:
            for i in range(nv):
                for j in range(self.j_block.shape[1]):
                    if self.j_block[i, j] != 0.0:
                        fh.write(f"{i} {nv + j} {self.j_block[i, j]!r}\n")
            for i, hi in enumerate(self.h):
                fh.write(f"{i} {hi!r}\n")


def to_ising(rbm: Rbm) -> IsingProblem:
    """Exact change of variables z=(s+1)/2 from the RBM energy."""
    a, b, w = rbm.a.data, rbm.b.data, rbm.W.data
    j_block = -w / 4.0
    h = np.concatenate([
        -a / 2.0 - w.sum(axis=1) / 4.0,
        -b / 2.0 - w.sum(axis=0) / 4.0,
    ])
    offset = float(-a.sum() / 2.0 - b.sum() / 2.0 - w.sum() / 4.0)
    return IsingProblem(h=h, j_block=j_block, offset=offset, n_visible=rbm.n_visible)


def sim_anneal_sample(problem: IsingProblem, n: int, rng: np.random.Generator,
                      n_sweeps: int = 1000, beta_start: float = 0.1,
                      beta_eff: float = 1.0) -> np.ndarray:
    """Metropolis simulated annealing on the Ising problem.

    A geometric inverse-temperature ladder beta_start -> beta_eff runs for
    ``n_sweeps`` sweeps over ``n`` independent restarts; one sweep updates
    every spin once (visible block, then hidden block; the bipartite
    support makes within-block updates exactly sequential single-spin
    Metropolis).  Returns binary z states of shape (n, units).
    """
    if beta_eff < beta_start:
        raise InvalidSchedule("beta must increase (temperature must not rise)")
    if n <= 0:
        return np.zeros((0, problem.h.size), dtype=np.float64)
    nv = problem.n_visible
    nh = problem.h.size - nv
    betas = beta_start * (beta_eff / beta_start) ** (np.arange(n_sweeps) / max(n_sweeps - 1, 1))
    s = rng.integers(0, 2, size=(n, nv + nh)).astype(np.float64) * 2.0 - 1.0
    hv, hh = problem.h[:nv], problem.h[nv:]
    j = problem.j_block
    for beta in betas:
        sv, sh = s[:, :nv], s[:, nv:]
        # visible block: local field depends on (frozen) hidden spins only
        local = hv + sh @ j.T
        delta = -2.0 * sv * local
        flip = (delta <= 0) | (rng.random(sv.shape) < np.exp(-beta * np.maximum(delta, 0.0)))
        sv[flip] *= -1.0
        local = hh + sv @ j
        delta = -2.0 * sh * local
        flip = (delta <= 0) | (rng.random(sh.shape) < np.exp(-beta * np.maximum(delta, 0.0)))
        sh[flip] *= -1.0
    return (s + 1.0) / 2.0


# ---------------------------------------------------------------------------
# Exact oracles (small models only)
# ---------------------------------------------------------------------------

MAX_ORACLE_UNITS = 20


def all_states(n_units: int) -> np.ndarray:
    """All binary states of n_units bits, shape (2**n, n), low bit first."""
    if n_units > MAX_ORACLE_UNITS:
        raise TooLarge(f"{n_units} units: enumeration capped at {MAX_ORACLE_UNITS}")
    grid = np.indices((2,) * n_units).reshape(n_units, -1).T[:, ::-1]
    return grid.astype(np.float64)


def exact_logz(rbm: Rbm) -> float:
    """log Z by exhaustive enumeration (max-subtracted log-sum-exp)."""
    if rbm.n_units > MAX_ORACLE_UNITS:
        raise TooLarge(f"{rbm.n_units} units: enumeration capped at {MAX_ORACLE_UNITS}")
    e = energy(rbm, all_states(rbm.n_units))
    return float(logsumexp(-e))


def exact_probabilities(rbm: Rbm) -> tuple[np.ndarray, np.ndarray]:
    """(states, probabilities) over the full state space of a small RBM."""
    states = all_states(rbm.n_units)
    e = energy(rbm, states)
    logp = -e - exact_logz(rbm)
    return states, np.exp(logp)


# ---------------------------------------------------------------------------
# Sampler handles
# ---------------------------------------------------------------------------

class GibbsPcdSampler:
    """Persistent block-Gibbs chains advanced k sweeps per draw."""

    kind = "gibbs_pcd"

    def __init__(self, rbm: Rbm, n_chains: int, rng: np.random.Generator, k: int = 30):
        self.rbm = rbm
        self.k = k
        self.chains = rng.integers(0, 2, size=(n_chains, rbm.n_units)).astype(np.float64)

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n <= 0:
            return np.zeros((0, self.rbm.n_units))
        rounds = -(-n // self.chains.shape[0])
        out = []
        for _ in range(rounds):
            self.chains = pcd_negative_phase(self.rbm, self.chains, rng, k=self.k)
            out.append(self.chains.copy())
        return np.concatenate(out, axis=0)[:n]


class SimAnnealSampler:
    """Independent annealing restarts on the current Ising image of the RBM."""

    kind = "sim_anneal"

    def __init__(self, rbm: Rbm, n_sweeps: int = 1000, beta_start: float = 0.1,
                 beta_eff: float = 1.0):
        self.rbm = rbm
        self.n_sweeps = n_sweeps
        self.beta_start = beta_start
        self.beta_eff = beta_eff

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        problem = to_ising(self.rbm)
        return sim_anneal_sample(problem, n, rng, n_sweeps=self.n_sweeps,
                                 beta_start=self.beta_start, beta_eff=self.beta_eff)


class ExactEnumSampler:
    """Exact ancestral draws from the enumerated distribution (<= 20 units)."""

    kind = "exact_enum"

    def __init__(self, rbm: Rbm):
        if rbm.n_units > MAX_ORACLE_UNITS:
            raise TooLarge("exact sampler limited to 20 units")
        self.rbm = rbm

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        states, probs = exact_probabilities(self.rbm)
        idx = rng.choice(states.shape[0], size=n, p=probs / probs.sum())
        return states[idx]


def make_sampler(name: str, rbm: Rbm, rng: np.random.Generator, *,
                 n_chains: int = 64, pcd_k: int = 30, anneal_sweeps: int = 1000,
                 beta_start: float = 0.1, beta_eff: float = 1.0):
    if name == "gibbs":
        return GibbsPcdSampler(rbm, n_chains, rng, k=pcd_k)
    if name == "simanneal":
        return SimAnnealSampler(rbm, n_sweeps=anneal_sweeps,
                                beta_start=beta_start, beta_eff=beta_eff)
    if name == "exact":
        return ExactEnumSampler(rbm)
    raise ValueError(f"unknown sampler {name!r}")
