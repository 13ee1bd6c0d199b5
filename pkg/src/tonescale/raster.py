"""Raster types, lossless PNG I/O, and resampling primitives.

Array conventions shared by the whole package:

  - bitonal images (manga pages, line maps): uint8 arrays of shape (H, W)
    with 0 = ink and 1 = paper
  - label maps: int32 arrays of shape (H, W); id 0 is reserved for
    structural-line / untoned pixels
  - feature grids: float64 arrays of shape (H, W, C) with finite values

Bitonal and label rasters persist as 8-bit PNGs (grayscale and indexed
respectively) and round-trip bit-exactly.  Feature grids persist as one
16-bit grayscale PNG per channel plus a JSON sidecar holding per-channel
value ranges, so they stay inspectable with ordinary image viewers.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from PIL import Image

_GRAY_MODES = ("L", "P", "1")


def round_half_up(x: float) -> int:
    """Round to nearest integer with .5 going up (symmetric for k<1 and k>1)."""
    return int(math.floor(x + 0.5))


def scaled_shape(height: int, width: int, k: float) -> tuple[int, int]:
    """Output dimensions for scale factor k, rounded half-up."""
    if k <= 0:
        raise ValueError(f"scale factor must be positive, got {k}")
    out_h = round_half_up(k * height)
    out_w = round_half_up(k * width)
    if out_h < 1 or out_w < 1:
        raise ValueError(f"scale {k} collapses {height}x{width} to zero size")
    return out_h, out_w


def _check_2d(arr: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{what} must be a non-empty 2-d array, got shape {arr.shape}")
    return arr


def as_bitonal(arr: np.ndarray) -> np.ndarray:
    """Validate and return a {0,1} uint8 raster."""
    arr = _check_2d(arr, "bitonal image")
    out = arr.astype(np.uint8, copy=False)
    if not np.isin(out, (0, 1)).all():
        raise ValueError("bitonal image must contain only 0 (ink) and 1 (paper)")
    return out


def as_labels(arr: np.ndarray) -> np.ndarray:
    """Validate and return a non-negative int32 label map."""
    arr = _check_2d(arr, "label map")
    out = arr.astype(np.int32, copy=False)
    if out.min() < 0:
        raise ValueError("label ids must be non-negative")
    return out


def as_feature_grid(arr: np.ndarray) -> np.ndarray:
    """Validate and return an (H, W, C) float64 grid with finite values."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or min(arr.shape) < 1:
        raise ValueError(f"feature grid must be (H, W, C), got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("feature grid contains non-finite values")
    return arr


def _open_8bit(path) -> Image.Image:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such image: {path}")
    im = Image.open(path)
    if im.mode not in _GRAY_MODES:
        raise ValueError(f"{path}: unsupported PNG mode {im.mode!r}, "
                         f"expected 8-bit grayscale or indexed")
    return im


def load_bitonal(path) -> np.ndarray:
    """Load an 8-bit grayscale/indexed PNG, binarized at 128 (>=128 -> paper)."""
    im = _open_8bit(path)
    arr = np.asarray(im.convert("L"))
    return (arr >= 128).astype(np.uint8)


def save_bitonal(img: np.ndarray, path) -> None:
    img = as_bitonal(img)
    Image.fromarray(img * np.uint8(255), mode="L").save(path)


def load_labels(path) -> np.ndarray:
    """Load a label map; indexed PNG values are read verbatim."""
    im = _open_8bit(path)
    return np.asarray(im, dtype=np.int32)


def save_labels(labels: np.ndarray, path) -> None:
    labels = as_labels(labels)
    if labels.max() > 255:
        raise ValueError("indexed PNG label maps support ids up to 255")
    im = Image.fromarray(labels.astype(np.uint8), mode="P")
    # identity grayscale palette keeps indices stable across save/load
    im.putpalette([v for i in range(256) for v in (i, i, i)])
    im.save(path)


def save_feature_grid(grid: np.ndarray, base) -> None:
    """Persist a feature grid as 16-bit PNGs (one per channel) + JSON sidecar."""
    grid = as_feature_grid(grid)
    base = Path(base)
    base.parent.mkdir(parents=True, exist_ok=True)
    ranges = []
    for c in range(grid.shape[2]):
        chan = grid[:, :, c]
        lo, hi = float(chan.min()), float(chan.max())
        ranges.append([lo, hi])
        if hi > lo:
            q = np.round((chan - lo) / (hi - lo) * 65535.0)
        else:
            q = np.zeros_like(chan)
        Image.fromarray(q.astype(np.uint16)).save(f"{base}_c{c}.png")
    sidecar = {
        "height": int(grid.shape[0]),
        "width": int(grid.shape[1]),
        "channels": int(grid.shape[2]),
        "ranges": ranges,
    }
    with open(f"{base}.json", "w") as fh:
        json.dump(sidecar, fh, indent=2)


def load_feature_grid(base) -> np.ndarray:
    base = Path(base)
    sidecar_path = Path(f"{base}.json")
    if not sidecar_path.exists():
        raise FileNotFoundError(f"no feature-grid sidecar: {sidecar_path}")
    with open(sidecar_path) as fh:
        meta = json.load(fh)
    out = np.zeros((meta["height"], meta["width"], meta["channels"]), dtype=np.float64)
    for c in range(meta["channels"]):
        q = np.asarray(Image.open(f"{base}_c{c}.png"), dtype=np.float64)
        lo, hi = meta["ranges"][c]
        out[:, :, c] = lo + q / 65535.0 * (hi - lo)
    return out


def _source_centers(n_out: int, n_src: int) -> np.ndarray:
    # center-aligned sampling: output pixel centers mapped into source
    # pixel-center coordinates; exact integers when n_out == n_src
    return (np.arange(n_out) + 0.5) * (n_src / n_out) - 0.5


def resample_bilinear(grid: np.ndarray, k: float) -> np.ndarray:
    """Bilinearly resample a float grid to round(k*H) x round(k*W).

    Sampling is center-aligned with edge clamping; k = 1 is an exact
    identity and constant inputs stay constant to machine precision.
    """
    arr = np.asarray(grid, dtype=np.float64)
    squeeze = arr.ndim == 2
    arr = as_feature_grid(arr)
    h, w = arr.shape[:2]
    out_h, out_w = scaled_shape(h, w, k)

    sy = np.clip(_source_centers(out_h, h), 0.0, h - 1.0)
    sx = np.clip(_source_centers(out_w, w), 0.0, w - 1.0)
    y0 = np.minimum(np.floor(sy).astype(np.int64), max(h - 2, 0))
    x0 = np.minimum(np.floor(sx).astype(np.int64), max(w - 2, 0))
    wy = (sy - y0)[:, None, None]
    wx = (sx - x0)[None, :, None]
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)

    rows0 = arr[y0]
    rows1 = arr[y1]
    top = rows0[:, x0] * (1.0 - wx) + rows0[:, x1] * wx
    bot = rows1[:, x0] * (1.0 - wx) + rows1[:, x1] * wx
    out = top * (1.0 - wy) + bot * wy
    return out[:, :, 0] if squeeze else out


def nearest_index_map(n_out: int, n_src: int) -> np.ndarray:
    """Source index chosen by center-aligned nearest-neighbor sampling."""
    idx = np.floor((np.arange(n_out) + 0.5) * (n_src / n_out)).astype(np.int64)
    return np.clip(idx, 0, n_src - 1)


def resample_nearest(arr: np.ndarray, k: float) -> np.ndarray:
    """Nearest-neighbor resample of a 2-d raster (labels, bitonal) or 3-d grid."""
    arr = np.asarray(arr)
    if arr.ndim not in (2, 3):
        raise ValueError(f"expected 2-d or 3-d array, got shape {arr.shape}")
    h, w = arr.shape[:2]
    out_h, out_w = scaled_shape(h, w, k)
    iy = nearest_index_map(out_h, h)
    ix = nearest_index_map(out_w, w)
    return arr[iy[:, None], ix[None, :]]


def binarize(grid: np.ndarray, channel: int = 0, threshold: float = 0.5) -> np.ndarray:
    """Threshold one channel of a feature grid: pixel = 1 iff value >= threshold."""
    grid = as_feature_grid(grid)
    if not 0 <= channel < grid.shape[2]:
        raise ValueError(f"channel {channel} out of range for {grid.shape[2]}-channel grid")
    return (grid[:, :, channel] >= threshold).astype(np.uint8)
