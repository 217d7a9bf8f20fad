"""Adam optimizer with bias-corrected moments."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class AdamState:
    """First/second moment accumulators for a fixed parameter set.

    beta1=0.9, beta2=0.999, eps=1e-8; the step counter t is shared by all
    parameters and incremented before bias correction.
    """

    def __init__(self, params: dict[str, Tensor],
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def step(self, params: dict[str, Tensor], lr: float) -> None:
        """Apply one update in place; parameters without a grad are skipped."""
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k, p in params.items():
            g = p.grad
            if g is None:
                continue
            m = self.m[k]
            v = self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def adam_step(params: dict[str, Tensor], state: AdamState, lr: float) -> None:
    """Functional alias for AdamState.step (gradients read from .grad)."""
    state.step(params, lr)
