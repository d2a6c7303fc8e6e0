"""Binary weight container.

Layout (all integers little-endian, payload little-endian float64):

    magic   4 bytes  b"CGW1"
    version u32      currently 1
    count   u32      number of tensors
    per tensor:
        name_len u32
        name     UTF-8 bytes
        rank     u32
        dims     rank * u64
        data     prod(dims) * f64

Tensors are written in the order given and read back in file order;
``load_weights`` returns an ordered dict of name -> float64 array.
"""

from __future__ import annotations

import struct
from collections import OrderedDict

import numpy as np

MAGIC = b"CGW1"
VERSION = 1


def save_weights(path, named_tensors) -> None:
    """Write ``{name: array}`` (or an iterable of pairs) to ``path``."""
    items = list(named_tensors.items()) \
        if hasattr(named_tensors, "items") else list(named_tensors)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(items)))
        for name, arr in items:
            arr = np.asarray(arr, dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(arr.tobytes())


def _read(fh, n: int, what: str) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise ValueError(f"weight file truncated while reading {what}")
    return buf


def load_weights(path) -> "OrderedDict[str, np.ndarray]":
    """Read a weight file back into an ordered name -> array mapping."""
    out: OrderedDict[str, np.ndarray] = OrderedDict()
    with open(path, "rb") as fh:
        magic = _read(fh, 4, "magic")
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}; expected {MAGIC!r}")
        version, count = struct.unpack("<II", _read(fh, 8, "header"))
        if version != VERSION:
            raise ValueError(f"unsupported weight file version {version}")
        for i in range(count):
            (name_len,) = struct.unpack("<I", _read(fh, 4, "name length"))
            name = _read(fh, name_len, "name").decode("utf-8")
            (rank,) = struct.unpack("<I", _read(fh, 4, "rank"))
            dims = struct.unpack(f"<{rank}Q", _read(fh, 8 * rank, "dims")) \
                if rank else ()
            n_items = int(np.prod(dims)) if rank else 1
            raw = _read(fh, 8 * n_items, f"tensor {name!r} payload")
            out[name] = np.frombuffer(raw, dtype="<f8").reshape(dims) \
                .astype(np.float64)
        trailing = fh.read(1)
        if trailing:
            raise ValueError("trailing bytes after last tensor")
    return out


def assign_weights(model, loaded: "OrderedDict[str, np.ndarray]") -> None:
    """Copy loaded tensors into a model exposing ``named_params()``.

    Every model parameter must be present with a matching shape; extra
    tensors in the file are rejected too, since they signal a topology
    mismatch.
    """
    params = dict(model.named_params())
    missing = sorted(set(params) - set(loaded))
    extra = sorted(set(loaded) - set(params))
    if missing or extra:
        raise ValueError(f"weight name mismatch: missing {missing}, "
                         f"unexpected {extra}")
    for name, p in params.items():
        arr = loaded[name]
        if arr.shape != p.value.shape:
            raise ValueError(f"tensor {name!r}: file shape {arr.shape} != "
                             f"model shape {p.value.shape}")
        p.value = arr.copy()
