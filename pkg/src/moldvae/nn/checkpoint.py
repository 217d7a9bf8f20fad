"""Checkpoint container: text header plus raw little-endian payloads.

Layout::

    moldvae-ckpt 1
    meta <one-line JSON>
    tensor <name> <dtype> <dim0,dim1,...> <offset> <nbytes>
    ...
    end
    <binary payloads, in header order>

Offsets are relative to the byte right after the ``end`` line.  Arrays
are stored little-endian, C order.  Loading validates the table and
raises CheckpointCorrupt on any inconsistency, so a truncated or edited
file fails loudly instead of yielding garbage tensors.
"""

from __future__ import annotations

import json

import numpy as np

FORMAT_LINE = "moldvae-ckpt 1"

_DTYPES = {"f8": "<f8", "f4": "<f4", "i8": "<i8", "u1": "|u1"}
_DTYPE_TAGS = {np.dtype(v): k for k, v in _DTYPES.items()}


class CheckpointCorrupt(ValueError):
    pass


def save_checkpoint(path, tensors: dict[str, np.ndarray], meta: dict) -> None:
    """Write arrays and a JSON metadata blob; iteration order is preserved."""
    entries = []
    offset = 0
    for name, arr in tensors.items():
        if " " in name:
            raise ValueError(f"tensor name {name!r} contains a space")
        tag = _DTYPE_TAGS.get(arr.dtype.newbyteorder("<") if arr.dtype.byteorder == ">" else arr.dtype)
        if tag is None:
            raise ValueError(f"unsupported dtype {arr.dtype} for {name!r}")
        nbytes = arr.size * arr.dtype.itemsize
        shape = ",".join(str(d) for d in arr.shape) if arr.ndim else "scalar"
        entries.append((name, tag, shape, offset, nbytes))
        offset += nbytes

    header = [FORMAT_LINE, "meta " + json.dumps(meta, sort_keys=True, separators=(",", ":"))]
    header += [f"tensor {n} {t} {s} {o} {b}" for n, t, s, o, b in entries]
    header.append("end")
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("utf-8"))
        for name, arr in tensors.items():
            fh.write(np.ascontiguousarray(arr).astype(arr.dtype.newbyteorder("<"), copy=False).tobytes())


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        raw = fh.read()
    nl = raw.find(b"\n")
    if nl < 0 or raw[:nl].decode("utf-8", "replace") != FORMAT_LINE:
        raise CheckpointCorrupt(f"{path}: bad format line")
    # locate end of header
    end_marker = raw.find(b"\nend\n")
    if end_marker < 0:
        raise CheckpointCorrupt(f"{path}: missing 'end' marker")
    header_lines = raw[:end_marker].decode("utf-8").split("\n")
    payload = raw[end_marker + len(b"\nend\n"):]

    if len(header_lines) < 2 or not header_lines[1].startswith("meta "):
        raise CheckpointCorrupt(f"{path}: missing meta line")
    try:
        meta = json.loads(header_lines[1][5:])
    except json.JSONDecodeError as exc:
        raise CheckpointCorrupt(f"{path}: bad meta JSON") from exc

    tensors: dict[str, np.ndarray] = {}
    expected_offset = 0
    for line in header_lines[2:]:
        parts = line.split(" ")
        if len(parts) != 6 or parts[0] != "tensor":
            raise CheckpointCorrupt(f"{path}: bad table line {line!r}")
        _, name, tag, shape_s, off_s, nbytes_s = parts
        if tag not in _DTYPES:
            raise CheckpointCorrupt(f"{path}: unknown dtype tag {tag!r}")
        dtype = np.dtype(_DTYPES[tag])
        shape = () if shape_s == "scalar" else tuple(int(d) for d in shape_s.split(","))
        offset, nbytes = int(off_s), int(nbytes_s)
        if offset != expected_offset:
            raise CheckpointCorrupt(f"{path}: non-contiguous offset for {name!r}")
        count = int(np.prod(shape)) if shape else 1
        if nbytes != count * dtype.itemsize:
            raise CheckpointCorrupt(f"{path}: size mismatch for {name!r}")
        if offset + nbytes > len(payload):
            raise CheckpointCorrupt(f"{path}: payload truncated at {name!r}")
        arr = np.frombuffer(payload, dtype=dtype, count=count, offset=offset).reshape(shape)
        tensors[name] = arr.copy()
        expected_offset = offset + nbytes
    if expected_offset != len(payload):
        raise CheckpointCorrupt(f"{path}: {len(payload) - expected_offset} trailing payload bytes")
    return tensors, meta
