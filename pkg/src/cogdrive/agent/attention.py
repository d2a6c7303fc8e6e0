"""Spatial attention readout for the driving policy.

The policy's self-attention layer mixes 16 tokens that tile the 64x64 frame
as a 4x4 grid (each token covers a 16x16 pixel patch).  Averaging the
attention matrix over query rows gives, per token, how much total attention
it receives -- a 4x4 saliency map over the scene.
"""

from __future__ import annotations

import numpy as np

from ..sim.render import CLASS_VEHICLE, EGO_COL, EGO_ROW
from .nets import TOKEN_GRID, PolicyNet

PATCH_PX = 64 // TOKEN_GRID     # pixels covered by one token per axis
EGO_CELL = (EGO_ROW // PATCH_PX, EGO_COL // PATCH_PX)


def attention_heatmap(policy: PolicyNet, state: np.ndarray) -> np.ndarray:
    """Run the policy on one frame stack and return the 4x4 attention map.

    Rows of the attention matrix are softmax distributions, so the row-mean
    sums to 1: the map is a distribution over the 16 spatial tokens.
    """
    policy.act(state)
    weights = policy.last_attention[0]          # (16, 16)
    return weights.mean(axis=0).reshape(TOKEN_GRID, TOKEN_GRID)


def heatmap_argmax_cell(heatmap: np.ndarray) -> tuple[int, int]:
    """(row, col) of the most-attended token."""
    flat = int(np.argmax(heatmap))
    return flat // TOKEN_GRID, flat % TOKEN_GRID


def pixel_cell(row_px: int, col_px: int) -> tuple[int, int]:
    """Token-grid cell containing a pixel of the 64x64 frame."""
    return row_px // PATCH_PX, col_px // PATCH_PX


def lead_vehicle_cell(state: np.ndarray) -> tuple[int, int] | None:
    """Token cell with the most non-ego vehicle pixels in the newest frame.

    Returns None when no vehicle pixels exist outside the ego's own cell
    (for example, an empty road ahead).
    """
    state = np.asarray(state)
    frame = state[-1]
    if frame.shape != (64, 64):
        raise ValueError(f"expected a (3, 64, 64) stack, got {state.shape}")
    vehicle = (frame == CLASS_VEHICLE).astype(np.int64)
    counts = vehicle.reshape(TOKEN_GRID, PATCH_PX, TOKEN_GRID, PATCH_PX) \
        .sum(axis=(1, 3))
    counts[EGO_CELL] = 0
    if counts.max() == 0:
        return None
    flat = int(np.argmax(counts))
    return flat // TOKEN_GRID, flat % TOKEN_GRID


def save_heatmap_pgm(heatmap: np.ndarray, path) -> None:
    """Dump a heatmap as a binary PGM, rescaled so the peak maps to 255."""
    heat = np.asarray(heatmap, dtype=np.float64)
    if heat.ndim != 2:
        raise ValueError(f"heatmap must be 2-D, got shape {heat.shape}")
    peak = heat.max()
    scaled = np.zeros_like(heat) if peak <= 0 else heat / peak * 255.0
    img = np.rint(scaled).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def load_heatmap_pgm(path) -> np.ndarray:
    """Read back a PGM written by :func:`save_heatmap_pgm` (uint8 values)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM file")
    w, h = (int(v) for v in parts[1].split())
    maxval = int(parts[2])
    if maxval != 255:
        raise ValueError(f"expected maxval 255, got {maxval}")
    img = np.frombuffer(parts[3][: w * h], dtype=np.uint8).reshape(h, w)
    return img.copy()
