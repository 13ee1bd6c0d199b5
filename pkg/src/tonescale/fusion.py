"""Recurrent, confidence-gated selection among patch proposals.

Proposals are folded into the output one level at a time.  Each level
gets a [0,1] attention mask; the mask is attenuated by the confidence
accumulated at earlier levels, so pixels already claimed with high
confidence are not overwritten.  With binary masks of disjoint support
every pixel ends up as exactly one proposal's value (or the backbone's),
which is the point: tone patches are chosen, not blended.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .proposal import Proposal, ProposalSet


@dataclass
class FusionTrace:
    fused: np.ndarray
    attention: list[np.ndarray] = field(default_factory=list)
    attention_normalized: list[np.ndarray] = field(default_factory=list)
    confidence: np.ndarray | None = None


def attention_from_labels(prop_labels: np.ndarray, prop_validity: np.ndarray,
                          target_labels: np.ndarray) -> np.ndarray:
    """Binary attention: 1 where the sampled label agrees with the target
    label, is valid, and is an actual tone region (label != 0)."""
    if prop_labels.shape != target_labels.shape:
        raise ValueError("label rasters must share dimensions")
    agree = (prop_labels == target_labels) & (prop_validity > 0) & (target_labels != 0)
    return agree.astype(np.float64)


def attention_from_descriptors(prop_desc: np.ndarray, prop_validity: np.ndarray,
                               target_desc: np.ndarray, window: int = 11,
                               sigma: float = 0.25) -> np.ndarray:
    """Soft attention from descriptor agreement.

    Scores exp(-d^2 / sigma^2) where d is the window-averaged per-pixel
    descriptor distance (L1 across channels) between the proposal and the
    resampled target descriptor; padded pixels score exactly 0.
    """
    if prop_desc.shape != target_desc.shape:
        raise ValueError("descriptor grids must share dimensions")
    valid = (prop_validity > 0).astype(np.float64)
    diff = np.abs(prop_desc - target_desc).sum(axis=2) * valid
    area = float(window * window)
    num = ndimage.uniform_filter(diff, size=window, mode="constant", cval=0.0) * area
    den = ndimage.uniform_filter(valid, size=window, mode="constant", cval=0.0) * area
    d = np.divide(num, den, out=np.full_like(num, np.inf), where=den > 0.5)
    score = np.exp(-np.square(d) / (sigma * sigma), where=np.isfinite(d),
                   out=np.zeros_like(d))
    return score * valid


def fuse_proposals(backbone: np.ndarray, proposals: ProposalSet, phi,
                   phi_index: str = "previous") -> FusionTrace:
    """Run the recurrent selection loop over all proposal levels.

    `phi(level_idx, proposal) -> mask` scores one proposal against the
    target.  `phi_index` picks which proposal each iteration scores:
    "previous" scores the one before the proposal being fused (the first
    iteration scores its own, having no predecessor), "current" scores
    the proposal being fused itself.
    """
    if phi_index not in ("previous", "current"):
        raise ValueError(f"phi_index must be 'previous' or 'current', got {phi_index!r}")
    levels = proposals.levels
    if not levels:
        raise ValueError("proposal set is empty")
    backbone = np.asarray(backbone, dtype=np.float64)
    if backbone.shape != levels[0].data.shape:
        raise ValueError("backbone and proposals must share shape")

    fused = backbone.copy()
    conf = np.zeros(backbone.shape[:2], dtype=np.float64)
    trace = FusionTrace(fused=fused)

    for i, prop in enumerate(levels):
        score_i = max(i - 1, 0) if phi_index == "previous" else i
        mask = np.asarray(phi(score_i, levels[score_i]), dtype=np.float64)
        if mask.shape != conf.shape:
            raise ValueError("attention mask has wrong shape")
        if mask.min() < 0.0 or mask.max() > 1.0:
            raise ValueError("attention values must lie in [0, 1]")
        gated = mask * (1.0 - conf)
        fused = fused * (1.0 - gated[:, :, None]) + prop.data * gated[:, :, None]
        conf = np.minimum(conf + mask * (1.0 - conf), 1.0)
        trace.attention.append(mask)
        trace.attention_normalized.append(gated)

    trace.fused = fused
    trace.confidence = conf
    return trace
