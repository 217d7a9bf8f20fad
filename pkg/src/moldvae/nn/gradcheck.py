"""Finite-difference oracle for reverse-mode gradients."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Tensor


def finite_diff_check(f: Callable[[], Tensor], params: list[Tensor],
                      h: float = 1e-5) -> float:
    """Max relative error between reverse-mode and central-difference grads.

    ``f`` must be a deterministic closure over ``params`` returning a
    scalar Tensor.  Relative error per coordinate is
    |a - n| / (|a| + |n| + 1e-12).  Parameters are restored on exit.
    """
    for p in params:
        p.zero_grad()
    out = f()
    out.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = f().item()
            flat[i] = orig - h
            down = f().item()
            flat[i] = orig
            numeric = (up - down) / (2.0 * h)
            ai = a.reshape(-1)[i]
            err = abs(ai - numeric) / (abs(ai) + abs(numeric) + 1e-12)
            worst = max(worst, err)
    return worst
