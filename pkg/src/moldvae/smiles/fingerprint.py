"""Hashed linear-path fingerprints and Tanimoto similarity.

Every simple atom path of 0..7 bonds is encoded as the sequence of
(element, aromatic) atom labels and bond orders along it, read in the
direction that gives the lexicographically smaller encoding.  Each
distinct encoding sets one bit of a 2048-bit vector via a 64-bit FNV-1a
hash, so fingerprints are deterministic across runs and platforms and
independent of atom numbering or traversal order.
"""

from __future__ import annotations

import numpy as np

from .mol import MolGraph

N_BITS = 2048
MAX_PATH_BONDS = 7

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


class Fingerprint:
    """Fixed-size bit vector; ``bits`` is a uint8 array of 0/1 flags."""

    __slots__ = ("bits",)

    def __init__(self, bits: np.ndarray):
        if bits.shape != (N_BITS,):
            raise ValueError(f"expected {N_BITS} bits, got shape {bits.shape}")
        self.bits = bits.astype(np.uint8)

    def popcount(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other) -> bool:
        return isinstance(other, Fingerprint) and bool(np.array_equal(self.bits, other.bits))


def _atom_label(g: MolGraph, i: int) -> str:
    a = g.atoms[i]
    return a.element + ("a" if a.aromatic else "")


def _path_encodings(g: MolGraph) -> set[bytes]:
    """Canonical encodings of all simple paths of 0..MAX_PATH_BONDS bonds."""
    n = len(g.atoms)
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for b in g.bonds:
        adj[b.i].append((b.j, b.order))
        adj[b.j].append((b.i, b.order))

    labels = [_atom_label(g, i) for i in range(n)]
    encodings: set[bytes] = set()

    def encode(atoms: list[int], orders: list[float]) -> bytes:
        parts = [labels[atoms[0]]]
        for order, a in zip(orders, atoms[1:]):
            parts.append(f"{order:g}")
            parts.append(labels[a])
        forward = "|".join(parts)
        backward = "|".join(reversed(parts))
        return min(forward, backward).encode()

    def walk(atoms: list[int], orders: list[float], visited: set[int]) -> None:
        encodings.add(encode(atoms, orders))
        if len(orders) == MAX_PATH_BONDS:
            return
        for nxt, order in adj[atoms[-1]]:
            if nxt in visited:
                continue
            atoms.append(nxt)
            orders.append(order)
            visited.add(nxt)
            walk(atoms, orders, visited)
            visited.remove(nxt)
            orders.pop()
            atoms.pop()

    for start in range(n):
        walk([start], [], {start})
    return encodings


def fingerprint(g: MolGraph) -> Fingerprint:
    bits = np.zeros(N_BITS, dtype=np.uint8)
    for enc in _path_encodings(g):
        bits[_fnv1a(enc) % N_BITS] = 1
    return Fingerprint(bits)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """|a AND b| / |a OR b|; 1.0 when both vectors are empty."""
    if a.bits.shape != b.bits.shape:
        raise ValueError("fingerprint lengths differ")
    inter = int(np.sum(a.bits & b.bits))
    union = int(np.sum(a.bits | b.bits))
    if union == 0:
        return 1.0
    return inter / union


def max_tanimoto_batch(queries: list[Fingerprint], refs: list[Fingerprint]) -> np.ndarray:
    """Max Tanimoto of each query against a reference set, vectorized.

    Returns an array of length len(queries); zeros when refs is empty.
    """
    if not queries:
        return np.zeros(0)
    if not refs:
        return np.zeros(len(queries))
    q = np.stack([f.bits for f in queries]).astype(np.float32)
    r = np.stack([f.bits for f in refs]).astype(np.float32)
    inter = q @ r.T
    union = q.sum(axis=1, keepdims=True) + r.sum(axis=1) - inter
    sim = np.where(union > 0, inter / np.maximum(union, 1), 1.0)
    return sim.max(axis=1).astype(np.float64)
