"""Neural layers on top of the autodiff Tensor.

Modules hold named parameter Tensors; ``named_params()`` walks them
recursively so the optimizer and checkpointing see a flat name -> Tensor
mapping.  Forward passes take an explicit ``train`` flag and, where
dropout applies, an explicit RNG so results are a pure function of
(parameters, inputs, rng seed).
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, ShapeMismatch, concat, embedding_lookup


class WidthNotDivisible(ValueError):
    pass


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int,
                   shape: tuple[int, ...], dtype=np.float64) -> np.ndarray:
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=shape).astype(dtype)


class Module:
    """Base class: parameter discovery over attributes and submodules."""

    def named_params(self, prefix: str = "") -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for name, value in vars(self).items():
            key = f"{prefix}{name}"
            if isinstance(value, Tensor) and value.requires_grad:
                out[key] = value
            elif isinstance(value, Module):
                out.update(value.named_params(prefix=f"{key}."))
            elif isinstance(value, (list, tuple)):
                for k, item in enumerate(value):
                    if isinstance(item, Module):
                        out.update(item.named_params(prefix=f"{key}.{k}."))
        return out

    def zero_grad(self) -> None:
        for p in self.named_params().values():
            p.zero_grad()


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator,
                 dtype=np.float64, bias_init: float = 0.0):
        self.W = Tensor.param(glorot_uniform(rng, d_in, d_out, (d_in, d_out), dtype))
        self.b = Tensor.param(np.full(d_out, bias_init, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.W.shape[0]:
            raise ShapeMismatch(f"linear expects {self.W.shape[0]} features, got {x.shape[-1]}")
        return x @ self.W + self.b


class Embedding(Module):
    def __init__(self, n_tokens: int, d: int, rng: np.random.Generator, dtype=np.float64):
        self.table = Tensor.param((rng.standard_normal((n_tokens, d)) / np.sqrt(d)).astype(dtype))

    def __call__(self, ids: np.ndarray) -> Tensor:
        if np.any(ids < 0) or np.any(ids >= self.table.shape[0]):
            raise IndexError("token id out of range")
        return embedding_lookup(self.table, ids)


class LayerNorm(Module):
    """Normalization over the last axis with learnable affine, eps=1e-5."""

    def __init__(self, d: int, dtype=np.float64, eps: float = 1e-5):
        self.gain = Tensor.param(np.ones(d, dtype=dtype))
        self.bias = Tensor.param(np.zeros(d, dtype=dtype))
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        mu = x.mean(axis=-1, keepdims=True)
        centered = x - mu
        var = (centered * centered).mean(axis=-1, keepdims=True)
        inv = (var + self.eps) ** -0.5
        return centered * inv * self.gain + self.bias


def dropout(x: Tensor, rate: float, train: bool, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout: train-time expectation matches eval output."""
    if not train or rate <= 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in train mode needs an rng")
    keep = 1.0 - rate
    mask = (rng.random(x.shape) < keep).astype(x.dtype) / keep
    return x * mask


class Conv1dSame(Module):
    """1-d convolution over (batch, seq, channels) with same-length output."""

    def __init__(self, c_in: int, c_out: int, width: int, rng: np.random.Generator,
                 dtype=np.float64):
        self.width = width
        self.W = Tensor.param(
            glorot_uniform(rng, c_in * width, c_out * width, (width * c_in, c_out), dtype))
        self.b = Tensor.param(np.zeros(c_out, dtype=dtype))

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim != 3:
            raise ShapeMismatch(f"conv1d expects (batch, seq, channels), got {x.shape}")
        w = self.width
        c_in = self.W.shape[0] // w
        if x.shape[-1] != c_in:
            raise ShapeMismatch(f"conv1d expects {c_in} channels, got {x.shape[-1]}")
        b_sz, seq, _ = x.shape
        pad = (w - 1) // 2
        windows = _sliding_windows(x, w, pad)           # (B, S, w*c_in)
        return windows @ self.W + self.b


def _sliding_windows(x: Tensor, width: int, pad: int) -> Tensor:
    """Zero-padded sliding windows, flattened to (B, S, width*C)."""
    b_sz, seq, c = x.shape
    data = np.zeros((b_sz, seq + 2 * pad, c), dtype=x.dtype)
    data[:, pad:pad + seq, :] = x.data
    view = np.lib.stride_tricks.sliding_window_view(data, (width,), axis=1)
    # view: (B, S, C, width) -> (B, S, width, C)
    fwd = np.ascontiguousarray(view.transpose(0, 1, 3, 2)).reshape(b_sz, seq, width * c)
    out = Tensor(fwd)

    def grad(g):
        g4 = g.reshape(b_sz, seq, width, c)
        buf = np.zeros((b_sz, seq + 2 * pad, c), dtype=g.dtype)
        for k in range(width):
            buf[:, k:k + seq, :] += g4[:, :, k, :]
        return buf[:, pad:pad + seq, :]

    return out._record((x,), (grad,))


class Highway(Module):
    """Gated skip layer: y = T(x) * H(x) + (1 - T(x)) * x.

    H is a gelu-activated linear map, T a sigmoid gate whose bias starts
    at -1 so the carry path dominates early in training.
    """

    def __init__(self, d: int, rng: np.random.Generator, dtype=np.float64):
        self.transform = Linear(d, d, rng, dtype)
        self.gate = Linear(d, d, rng, dtype, bias_init=-1.0)

    def __call__(self, x: Tensor) -> Tensor:
        h = self.transform(x).gelu()
        t = self.gate(x).sigmoid()
        return t * h + (1.0 - t) * x


class MultiHeadAttention(Module):
    def __init__(self, d_model: int, n_heads: int, rng: np.random.Generator,
                 dtype=np.float64, attn_dropout: float = 0.0):
        if d_model % n_heads:
            raise WidthNotDivisible(f"{d_model} not divisible by {n_heads} heads")
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.attn_dropout = attn_dropout
        self.wq = Linear(d_model, d_model, rng, dtype)
        self.wk = Linear(d_model, d_model, rng, dtype)
        self.wv = Linear(d_model, d_model, rng, dtype)
        self.wo = Linear(d_model, d_model, rng, dtype)

    def _heads(self, x: Tensor) -> Tensor:
        b_sz, seq, _ = x.shape
        return x.reshape(b_sz, seq, self.n_heads, self.d_head).transpose(0, 2, 1, 3)

    def __call__(self, q: Tensor, k: Tensor, v: Tensor,
                 mask: np.ndarray | None = None,
                 train: bool = False, rng: np.random.Generator | None = None) -> Tensor:
        """Scaled dot-product attention.

        ``mask`` is additive, broadcastable to (B, heads, Sq, Sk); use a
        large negative value to zero out attention to masked keys.
        """
        b_sz, seq_q, d_model = q.shape
        qh, kh, vh = self._heads(q), self._heads(k), self._heads(v)
        scores = (qh @ kh.transpose(0, 1, 3, 2)) * (1.0 / np.sqrt(self.d_head))
        if mask is not None:
            scores = scores + mask.astype(scores.dtype)
        weights = scores.softmax(axis=-1)
        weights = dropout(weights, self.attn_dropout, train, rng)
        ctx = (weights @ vh).transpose(0, 2, 1, 3).reshape(b_sz, seq_q, d_model)
        return self.wo(ctx)


class FeedForward(Module):
    def __init__(self, d_model: int, d_ff: int, rng: np.random.Generator,
                 dtype=np.float64, rate: float = 0.0):
        self.lin1 = Linear(d_model, d_ff, rng, dtype)
        self.lin2 = Linear(d_ff, d_model, rng, dtype)
        self.rate = rate

    def __call__(self, x: Tensor, train: bool = False,
                 rng: np.random.Generator | None = None) -> Tensor:
        h = dropout(self.lin1(x).gelu(), self.rate, train, rng)
        return self.lin2(h)


class TransformerEncoderLayer(Module):
    """Pre-norm encoder layer: x + attn(LN(x)), then x + ffn(LN(x))."""

    def __init__(self, d_model: int, d_ff: int, n_heads: int, rng: np.random.Generator,
                 dtype=np.float64, rate: float = 0.1):
        self.norm1 = LayerNorm(d_model, dtype)
        self.attn = MultiHeadAttention(d_model, n_heads, rng, dtype, attn_dropout=rate)
        self.norm2 = LayerNorm(d_model, dtype)
        self.ffn = FeedForward(d_model, d_ff, rng, dtype, rate=rate)
        self.rate = rate

    def __call__(self, x: Tensor, mask: np.ndarray | None,
                 train: bool = False, rng: np.random.Generator | None = None) -> Tensor:
        h = self.norm1(x)
        x = x + self.attn(h, h, h, mask, train, rng)
        x = x + self.ffn(self.norm2(x), train, rng)
        return x


class TransformerDecoderLayer(Module):
    """Pre-norm decoder layer: causal self-attention, cross-attention, FFN."""

    def __init__(self, d_model: int, d_ff: int, n_heads: int, rng: np.random.Generator,
                 dtype=np.float64, rate: float = 0.1):
        self.norm1 = LayerNorm(d_model, dtype)
        self.self_attn = MultiHeadAttention(d_model, n_heads, rng, dtype, attn_dropout=rate)
        self.norm2 = LayerNorm(d_model, dtype)
        self.cross_attn = MultiHeadAttention(d_model, n_heads, rng, dtype, attn_dropout=rate)
        self.norm3 = LayerNorm(d_model, dtype)
        self.ffn = FeedForward(d_model, d_ff, rng, dtype, rate=rate)
        self.rate = rate

    def __call__(self, x: Tensor, memory: Tensor, self_mask: np.ndarray | None,
                 train: bool = False, rng: np.random.Generator | None = None) -> Tensor:
        h = self.norm1(x)
        x = x + self.self_attn(h, h, h, self_mask, train, rng)
        h = self.norm2(x)
        x = x + self.cross_attn(h, memory, memory, None, train, rng)
        x = x + self.ffn(self.norm3(x), train, rng)
        return x


def sinusoidal_encoding(max_len: int, d: int, dtype=np.float64) -> np.ndarray:
    """Original transformer positional encoding table of shape (max_len, d)."""
    pos = np.arange(max_len, dtype=np.float64)[:, None]
    idx = np.arange(d, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * np.floor(idx / 2.0) / d)
    pe = np.where(idx % 2 == 0, np.sin(angle), np.cos(angle))
    return pe.astype(dtype)


def causal_mask(seq: int, dtype=np.float64) -> np.ndarray:
    """Additive (1, 1, S, S) mask hiding positions above the diagonal."""
    m = np.triu(np.full((seq, seq), -1e30, dtype=dtype), k=1)
    return m[None, None, :, :]


def padding_mask(lengths: np.ndarray, seq: int, dtype=np.float64) -> np.ndarray:
    """Additive (B, 1, 1, S) mask hiding key positions at or past each length."""
    cols = np.arange(seq)[None, :]
    blocked = cols >= np.asarray(lengths)[:, None]
    m = np.where(blocked, -1e30, 0.0).astype(dtype)
    return m[:, None, None, :]
