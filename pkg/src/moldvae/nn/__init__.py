"""Minimal deterministic tensor/layer substrate with reverse-mode gradients."""

from .tensor import (
    ShapeMismatch,
    Tensor,
    as_tensor,
    concat,
    embedding_lookup,
    gather_last,
    no_grad,
    stack,
    where_const,
)
from .layers import (
    Conv1dSame,
    Embedding,
    FeedForward,
    Highway,
    LayerNorm,
    Linear,
    Module,
    MultiHeadAttention,
    TransformerDecoderLayer,
    TransformerEncoderLayer,
    WidthNotDivisible,
    causal_mask,
    dropout,
    glorot_uniform,
    padding_mask,
    sinusoidal_encoding,
)
from .adam import AdamState, adam_step
from .gradcheck import finite_diff_check
from .checkpoint import CheckpointCorrupt, load_checkpoint, save_checkpoint
from . import rngkeys
from .rngkeys import stream

__all__ = [
    "Tensor", "ShapeMismatch", "as_tensor", "concat", "stack", "no_grad",
    "embedding_lookup", "gather_last", "where_const",
    "Module", "Linear", "Embedding", "LayerNorm", "Conv1dSame", "Highway",
    "MultiHeadAttention", "FeedForward", "TransformerEncoderLayer",
    "TransformerDecoderLayer", "WidthNotDivisible",
    "dropout", "glorot_uniform", "sinusoidal_encoding", "causal_mask", "padding_mask",
    "AdamState", "adam_step", "finite_diff_check",
    "CheckpointCorrupt", "load_checkpoint", "save_checkpoint",
    "rngkeys", "stream",
]
