"""Grid-anchor patch sampling: tile verbatim source crops into proposals.

A proposal is a target-resolution raster assembled from local patches of
the source, one per cell of a regular anchor grid.  Patches are copied
pixel-for-pixel (never interpolated), so the high-frequency pattern in
each patch survives rescaling intact; per-pixel validity marks target
pixels whose source coordinates fell outside the image.

Denser anchor grids give finer-grained correspondence at the cost of
smaller intact patches; a hierarchy of grid densities (default 1, 2, 4,
8 anchors per side) supplies the fusion stage with one proposal per
granularity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import raster

DEFAULT_LEVELS = (1, 2, 4, 8)


@dataclass(frozen=True)
class AnchorGrid:
    """rows x cols anchors placed at cell centers of the source image."""

    rows: int
    cols: int
    source_h: int
    source_w: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("anchor grid must be at least 1x1")

    def center(self, i: int, j: int) -> tuple[float, float]:
        return ((i + 0.5) * self.source_h / self.rows,
                (j + 0.5) * self.source_w / self.cols)


@dataclass
class Proposal:
    level: int
    grid: AnchorGrid
    data: np.ndarray        # (target_h, target_w, C) verbatim-copied values
    validity: np.ndarray    # (target_h, target_w) uint8, 0 where padded
    row_src: np.ndarray     # source row index per target row (may be out of range)
    col_src: np.ndarray


@dataclass
class ProposalSet:
    levels: list[Proposal]
    k: float
    target_shape: tuple[int, int]


def _bounds(n: int, parts: int) -> list[tuple[int, int]]:
    if parts > n:
        raise ValueError(f"cannot split {n} pixels into {parts} tiles")
    edges = [i * n // parts for i in range(parts + 1)]
    return [(edges[i], edges[i + 1]) for i in range(parts)]


def tile_bounds(target_h: int, target_w: int, rows: int,
                cols: int) -> list[tuple[int, int, int, int]]:
    """Rectangles (r0, r1, c0, c1) partitioning the target exactly."""
    row_b = _bounds(target_h, rows)
    col_b = _bounds(target_w, cols)
    return [(r0, r1, c0, c1) for r0, r1 in row_b for c0, c1 in col_b]


def _axis_maps(n_src: int, n_target: int, parts: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-target-pixel source index along one axis.

    Each tile copies a contiguous source run of its own length, centered
    on its anchor; indices step by one inside a tile, so patches are
    verbatim translations.
    """
    idx = np.empty(n_target, dtype=np.int64)
    for i, (b0, b1) in enumerate(_bounds(n_target, parts)):
        size = b1 - b0
        center = (i + 0.5) * n_src / parts
        start = raster.round_half_up(center - size / 2)
        idx[b0:b1] = start + np.arange(size)
    return idx, (idx >= 0) & (idx < n_src)


def sample_proposal(source: np.ndarray, grid: AnchorGrid, k: float,
                    pad_values=None) -> Proposal:
    """Assemble one proposal by tiling anchor-centered crops of `source`.

    Out-of-range coordinates (k > 1 pushes patches past the image edge)
    are filled with `pad_values` (per channel, default 0) and flagged in
    the validity mask.
    """
    source = raster.as_feature_grid(source)
    h, w, c = source.shape
    if (grid.source_h, grid.source_w) != (h, w):
        raise ValueError("anchor grid was built for a different source size")
    target_h, target_w = raster.scaled_shape(h, w, k)

    iy, vy = _axis_maps(h, target_h, grid.rows)
    ix, vx = _axis_maps(w, target_w, grid.cols)
    data = source[np.clip(iy, 0, h - 1)[:, None], np.clip(ix, 0, w - 1)[None, :]]
    validity = (vy[:, None] & vx[None, :])
    pad = np.zeros(c) if pad_values is None else np.asarray(pad_values, dtype=np.float64)
    data[~validity] = pad
    return Proposal(level=grid.rows, grid=grid, data=data,
                    validity=validity.astype(np.uint8), row_src=iy, col_src=ix)


def sample_proposal_set(source: np.ndarray, levels, k: float,
                        pad_values=None) -> ProposalSet:
    """One proposal per anchor-grid density; all share the target size."""
    levels = list(levels)
    if not levels:
        raise ValueError("need at least one anchor-grid level")
    source = raster.as_feature_grid(source)
    h, w = source.shape[:2]
    proposals = [
        sample_proposal(source, AnchorGrid(lv, lv, h, w), k, pad_values)
        for lv in levels
    ]
    return ProposalSet(levels=proposals, k=k,
                       target_shape=raster.scaled_shape(h, w, k))


def sample_label_proposal(labels: np.ndarray, grid: AnchorGrid,
                          k: float) -> tuple[np.ndarray, np.ndarray]:
    """Label map sampled with the same patch geometry; padding gets id 0."""
    labels = raster.as_labels(labels)
    h, w = labels.shape
    if (grid.source_h, grid.source_w) != (h, w):
        raise ValueError("anchor grid was built for a different source size")
    target_h, target_w = raster.scaled_shape(h, w, k)

    iy, vy = _axis_maps(h, target_h, grid.rows)
    ix, vx = _axis_maps(w, target_w, grid.cols)
    out = labels[np.clip(iy, 0, h - 1)[:, None], np.clip(ix, 0, w - 1)[None, :]]
    validity = (vy[:, None] & vx[None, :])
    out = np.where(validity, out, 0).astype(np.int32)
    return out, validity.astype(np.uint8)
