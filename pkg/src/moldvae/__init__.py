"""Discrete variational autoencoder with an RBM latent prior for SMILES.

A numpy library implementing the full pipeline: SMILES lexing and
validity metrics, a minimal reverse-mode autodiff substrate, the
transformer encoder/decoder pair, spike-and-exponential latent sampling
against a 128+128-unit restricted Boltzmann machine, block-Gibbs (PCD)
and simulated-annealing latent samplers, AIS evaluation of the
partition function, and the training/generation drivers.
"""

__version__ = "0.1.0"
