"""Frame and episode-log serialization.

Frames go to binary PGM (P5) with class ids scaled by 100, so segmentation
output is viewable in any image tool.  Episode logs are JSONL: one object per
step with the fields {t, action, speed, gap, ttc_truth, collided, idle,
reward_components}.
"""

from __future__ import annotations

import json

import numpy as np

PGM_SCALE = 100


def write_pgm(path, frame: np.ndarray) -> None:
    """Write a (H, W) class-id grid as a binary PGM, ids scaled x100."""
    frame = np.asarray(frame)
    if frame.ndim != 2:
        raise ValueError(f"frame must be 2-D, got shape {frame.shape}")
    if frame.max(initial=0) * PGM_SCALE > 255:
        raise ValueError("class ids too large for PGM byte range")
    h, w = frame.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write((frame.astype(np.uint8) * PGM_SCALE).tobytes())


def read_pgm(path) -> np.ndarray:
    """Read back a PGM written by :func:`write_pgm`, returning class ids."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P5":
            raise ValueError(f"not a binary PGM: magic {magic!r}")
        dims = fh.readline().split()
        w, h = int(dims[0]), int(dims[1])
        maxval = int(fh.readline())
        if maxval != 255:
            raise ValueError(f"unsupported maxval {maxval}")
        data = fh.read(w * h)
        if len(data) != w * h:
            raise ValueError("PGM payload truncated")
    grid = np.frombuffer(data, dtype=np.uint8).reshape(h, w)
    return (grid // PGM_SCALE).astype(np.uint8)


def write_jsonl(path, records) -> None:
    """One JSON object per line; keys kept in insertion order."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def read_jsonl(path) -> list[dict]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out
