"""End-to-end rescaling pipeline.

Steps: build the tone descriptor map, resample the structural components
(lines bilinearly, labels nearest), sample hierarchical patch proposals
from the source image + descriptors, fuse them with the recurrent
selector against a backbone initialized from nearest-neighbor pixels,
then binarize and overlay the rescaled line work.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import raster
from .descriptor import (
    build_descriptor_map,
    resample_semantics,
    sliding_window_descriptor,
)
from .fusion import FusionTrace, attention_from_descriptors, attention_from_labels, fuse_proposals
from .metrics import LossWeights
from .proposal import DEFAULT_LEVELS, AnchorGrid, sample_label_proposal, sample_proposal_set

PAD_PAPER = (1.0, 0.0, 0.0, 0.0, 0.0)  # paper-white pixel, null descriptor


@dataclass
class RetargetConfig:
    scale: float = 1.0
    levels: tuple = DEFAULT_LEVELS
    phi_mode: str = "label"          # "label" (synthetic) or "pattern"
    phi_index: str = "current"       # see fusion.fuse_proposals
    ti_window: int = 11
    weights: LossWeights = field(default_factory=LossWeights)
    binarize_threshold: float = 0.5
    dump_traces: bool = False

    def __post_init__(self):
        if not 0.25 <= self.scale <= 2.0:
            raise ValueError(f"scale {self.scale} outside supported range [0.25, 2]")
        levels = tuple(self.levels)
        if not levels or list(levels) != sorted(levels):
            raise ValueError("levels must be a non-empty ascending sequence")
        if self.phi_mode not in ("label", "pattern"):
            raise ValueError(f"unknown phi mode {self.phi_mode!r}")
        self.levels = levels


@dataclass
class RetargetResult:
    output: np.ndarray
    trace: FusionTrace
    resampled_lines: np.ndarray
    resampled_labels: np.ndarray | None
    label_masks: list[np.ndarray] | None
    proposals: object | None = None  # retained only when dumping traces


def retarget(manga: np.ndarray, lines: np.ndarray, labels: np.ndarray | None,
             config: RetargetConfig) -> RetargetResult:
    """Rescale structure to config.scale while keeping tones pixel-exact."""
    manga = raster.as_bitonal(manga)
    lines = raster.as_bitonal(lines)
    if manga.shape != lines.shape:
        raise ValueError("manga and lines must share dimensions")
    if labels is not None:
        labels = raster.as_labels(labels)
        if labels.shape != manga.shape:
            raise ValueError("labels must match the manga dimensions")
    elif config.phi_mode == "label":
        raise ValueError("label attention requires a label map")

    k = config.scale
    h, w = manga.shape

    if labels is not None:
        desc = build_descriptor_map(manga, labels)
    else:
        desc = sliding_window_descriptor(manga)
    lines_t, desc_t = resample_semantics(lines, desc, k)
    labels_t = raster.resample_nearest(labels, k) if labels is not None else None

    source_feat = np.concatenate([manga.astype(np.float64)[:, :, None], desc], axis=2)
    proposals = sample_proposal_set(source_feat, config.levels, k,
                                    pad_values=PAD_PAPER)

    backbone_pix = raster.resample_nearest(manga, k).astype(np.float64)
    backbone = np.concatenate([backbone_pix[:, :, None], desc_t], axis=2)

    label_masks = None
    if config.phi_mode == "label":
        label_masks = []
        for lv in config.levels:
            sampled, validity = sample_label_proposal(
                labels, AnchorGrid(lv, lv, h, w), k)
            label_masks.append(attention_from_labels(sampled, validity, labels_t))
        phi = lambda i, prop: label_masks[i]
    else:
        phi = lambda i, prop: attention_from_descriptors(
            prop.data[:, :, 1:], prop.validity, desc_t, window=config.ti_window)

    trace = fuse_proposals(backbone, proposals, phi, config.phi_index)

    output = raster.binarize(trace.fused, channel=0,
                             threshold=config.binarize_threshold)
    output[lines_t == 0] = 0  # line work always wins over tone
    return RetargetResult(output=output, trace=trace, resampled_lines=lines_t,
                          resampled_labels=labels_t, label_masks=label_masks,
                          proposals=proposals if config.dump_traces else None)


def bilinear_baseline(manga: np.ndarray, k: float,
                      threshold: float = 0.5) -> np.ndarray:
    """The naive competitor: bilinear resampling plus thresholding."""
    manga = raster.as_bitonal(manga)
    blended = raster.resample_bilinear(manga.astype(np.float64), k)
    return raster.binarize(blended[:, :, None], threshold=threshold)


def dump_trace(result: RetargetResult, out_dir) -> None:
    """Write per-level attention, the confidence map, and (when retained)
    the proposals' pixel channel + validity as PNGs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    from PIL import Image

    def save_map(arr, name):
        img = np.clip(np.round(arr * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(img, mode="L").save(out_dir / name)

    for i, att in enumerate(result.trace.attention):
        save_map(att, f"attention_l{i}.png")
        save_map(result.trace.attention_normalized[i], f"attention_gated_l{i}.png")
    save_map(result.trace.confidence, "confidence.png")
    if result.proposals is not None:
        for prop in result.proposals.levels:
            raster.save_bitonal((prop.data[:, :, 0] >= 0.5).astype(np.uint8),
                                out_dir / f"proposal_{prop.level}x{prop.level}.png")
            raster.save_bitonal(prop.validity,
                                out_dir / f"validity_{prop.level}x{prop.level}.png")
