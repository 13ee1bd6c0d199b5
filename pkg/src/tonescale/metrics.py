"""Evaluation metrics for screentone-preserving rescaling.

Screentones are translation-insensitive: a rescaled region filled with
the right tone at the wrong phase looks perfect but scores terribly
under pixel-aligned metrics.  Every tone metric here therefore searches
a small integer offset window per region before measuring, using exact
plane-function templates (shifting never interpolates).

Shift convention: shift(img, (dy, dx))[y, x] = img[y + dy, x + dx], so
an image that equals a template translated by (+3, +2) is recovered at
offset (-3, -2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import raster
from .descriptor import build_descriptor_map, estimate_period
from .tones import ToneSpec, generate_tone

SEARCH_RADIUS = 5  # +/- pixels: an 11x11 offset window


def _offsets(radius: int):
    offs = [(dy, dx) for dy in range(-radius, radius + 1)
            for dx in range(-radius, radius + 1)]
    offs.sort(key=lambda d: (d[0] * d[0] + d[1] * d[1], d[0], d[1]))
    return offs


def _padded_template(spec: ToneSpec, h: int, w: int, pad: int) -> np.ndarray:
    return generate_tone(spec, w + 2 * pad, h + 2 * pad, origin=(-pad, -pad))


def box_halve(arr: np.ndarray) -> np.ndarray:
    """2x2 box mean, cropping odd trailing rows/cols."""
    h, w = arr.shape[:2]
    h2, w2 = h // 2, w // 2
    a = arr[:2 * h2, :2 * w2].astype(np.float64)
    return 0.25 * (a[0::2, 0::2] + a[0::2, 1::2] + a[1::2, 0::2] + a[1::2, 1::2])


@dataclass
class ToneLossResult:
    total: float
    per_region: dict[int, float]
    offsets: dict[int, tuple[int, int]]


def tone_loss(gen: np.ndarray, labels: np.ndarray, assignment: dict[int, ToneSpec],
              radius: int = SEARCH_RADIUS, multiscale: bool = False,
              double_offset: bool = True) -> ToneLossResult:
    """Per-region minimum RMSE against the region's tone template over a
    small integer offset window; the total sums the regions.

    Multiscale mode finds the offset on 2x box-downsampled images (so the
    effective reach doubles), applies the doubled offset to the full-res
    template, and evaluates there without further search.
    """
    gen = raster.as_bitonal(gen)
    labels = raster.as_labels(labels)
    if gen.shape != labels.shape:
        raise ValueError("image and labels must share dimensions")
    h, w = gen.shape
    # the half-resolution search reaches radius steps = 2*radius source px
    pad = radius * (2 if multiscale else 1)
    gen_f = gen.astype(np.float64)

    per_region: dict[int, float] = {}
    offsets: dict[int, tuple[int, int]] = {}
    for r in np.unique(labels):
        if r == 0:
            continue
        if int(r) not in assignment:
            raise ValueError(f"no tone assigned to region {int(r)}")
        spec = assignment[int(r)]
        tmpl = _padded_template(spec, h, w, pad).astype(np.float64)
        ys, xs = np.nonzero(labels == r)
        gvals = gen_f[ys, xs]

        if multiscale:
            best = _multiscale_offset(gen, labels == r, tmpl, pad, radius)
            if double_offset:
                best = (2 * best[0], 2 * best[1])
            dy, dx = best
            rmse = _rmse(gvals, tmpl[ys + pad + dy, xs + pad + dx])
        else:
            best, rmse = None, math.inf
            for dy, dx in _offsets(radius):
                cand = _rmse(gvals, tmpl[ys + pad + dy, xs + pad + dx])
                if cand < rmse - 1e-15:
                    best, rmse = (dy, dx), cand
                    if rmse == 0.0:
                        break  # exact match; no offset can improve on 0
        per_region[int(r)] = rmse
        offsets[int(r)] = best
    return ToneLossResult(total=float(sum(per_region.values())),
                          per_region=per_region, offsets=offsets)


def _rmse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(a - b))))


def _multiscale_offset(gen, mask, tmpl_padded, pad, radius):
    """Best offset found at half resolution (strictly-inside mask)."""
    gen2 = box_halve(gen)
    tmpl2 = box_halve(tmpl_padded)  # pad is even, so half-pad aligns
    pad2 = pad // 2
    m = mask[:2 * (mask.shape[0] // 2), :2 * (mask.shape[1] // 2)]
    m2 = (m[0::2, 0::2] & m[0::2, 1::2] & m[1::2, 0::2] & m[1::2, 1::2])
    ys, xs = np.nonzero(m2)
    if ys.size == 0:
        return (0, 0)
    gvals = gen2[ys, xs]
    best, best_err = (0, 0), math.inf
    for dy, dx in _offsets(radius):
        cand = _rmse(gvals, tmpl2[ys + pad2 + dy, xs + pad2 + dx])
        if cand < best_err - 1e-15:
            best, best_err = (dy, dx), cand
    return best


def descriptor_loss(gen: np.ndarray, labels: np.ndarray,
                    ref_desc: np.ndarray) -> float:
    """Mean (over toned pixels) squared descriptor difference between the
    generated image's measured descriptors and a reference grid."""
    gen = raster.as_bitonal(gen)
    labels = raster.as_labels(labels)
    ref_desc = raster.as_feature_grid(ref_desc)
    if gen.shape != labels.shape or ref_desc.shape[:2] != gen.shape:
        raise ValueError("image, labels and reference grid must share dimensions")
    measured = build_descriptor_map(gen, labels)
    toned = labels != 0
    if not toned.any():
        return 0.0
    sq = np.square(measured - ref_desc).sum(axis=2)
    return float(sq[toned].mean())


def attention_loss_unsupervised(maps) -> float:
    """Distance of attention stacks from binary decisions: each level
    contributes mean |(|M - 0.5| - 0.5)|; binary maps score 0."""
    total = 0.0
    for m in maps:
        m = np.asarray(m, dtype=np.float64)
        if m.min() < 0.0 or m.max() > 1.0:
            raise ValueError("attention values must lie in [0, 1]")
        total += float(np.mean(np.abs(np.abs(m - 0.5) - 0.5)))
    return total


def attention_loss_supervised(maps, refs) -> float:
    """Sum over levels of root-mean-square difference to reference masks."""
    maps, refs = list(maps), list(refs)
    if len(maps) != len(refs):
        raise ValueError(f"{len(maps)} maps vs {len(refs)} reference masks")
    total = 0.0
    for m, r in zip(maps, refs):
        m = np.asarray(m, dtype=np.float64)
        r = np.asarray(r, dtype=np.float64)
        if m.shape != r.shape:
            raise ValueError("mask dimensions disagree")
        total += float(np.sqrt(np.mean(np.square(m - r))))
    return total


def label_agreement_masks(labels: np.ndarray, k: float, levels) -> list[np.ndarray]:
    """Reference attention per level: where the anchor-sampled label map
    agrees with the plainly-resampled one (and is valid and toned)."""
    from .fusion import attention_from_labels
    from .proposal import AnchorGrid, sample_label_proposal

    labels = raster.as_labels(labels)
    h, w = labels.shape
    target = raster.resample_nearest(labels, k)
    out = []
    for lv in levels:
        sampled, validity = sample_label_proposal(labels, AnchorGrid(lv, lv, h, w), k)
        out.append(attention_from_labels(sampled, validity, target))
    return out


PSNR_CAP = 99.0


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio of two bitonal images on a 0..255 scale,
    capped at 99 dB for identical inputs."""
    a = raster.as_bitonal(a)
    b = raster.as_bitonal(b)
    if a.shape != b.shape:
        raise ValueError("images must share dimensions")
    frac = float(np.mean(a != b))
    if frac == 0.0:
        return PSNR_CAP
    return min(-10.0 * math.log10(frac), PSNR_CAP)


_SSIM_SIGMA = 1.5
_SSIM_RADIUS = 5  # 11-tap Gaussian window


def _gauss_blur(x: np.ndarray) -> np.ndarray:
    k = np.exp(-0.5 * (np.arange(-_SSIM_RADIUS, _SSIM_RADIUS + 1) / _SSIM_SIGMA) ** 2)
    k /= k.sum()
    out = ndimage.correlate1d(x, k, axis=0, mode="reflect")
    return ndimage.correlate1d(out, k, axis=1, mode="reflect")


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity with an 11x11 Gaussian window
    (sigma 1.5) and the standard constants, on a 0..255 scale."""
    a = raster.as_bitonal(a).astype(np.float64) * 255.0
    b = raster.as_bitonal(b).astype(np.float64) * 255.0
    if a.shape != b.shape:
        raise ValueError("images must share dimensions")
    c1 = (0.01 * 255.0) ** 2
    c2 = (0.03 * 255.0) ** 2
    mu_a, mu_b = _gauss_blur(a), _gauss_blur(b)
    var_a = _gauss_blur(a * a) - mu_a * mu_a
    var_b = _gauss_blur(b * b) - mu_b * mu_b
    cov = _gauss_blur(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


_METRICS = {"psnr": psnr, "ssim": ssim}


def aligned_metric(gen: np.ndarray, gt: np.ndarray, labels: np.ndarray,
                   assignment: dict[int, ToneSpec], metric: str = "psnr",
                   radius: int = SEARCH_RADIUS):
    """Metric against the best-matched ground truth: every region's tone
    template is allowed an independent small shift before comparison.

    Offsets are chosen per region by pixel agreement; the recomposed
    ground truth is then scored globally.  Never below the unaligned
    metric (the null alignment is always a candidate).
    """
    if metric not in _METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    gen = raster.as_bitonal(gen)
    gt = raster.as_bitonal(gt)
    labels = raster.as_labels(labels)
    if not (gen.shape == gt.shape == labels.shape):
        raise ValueError("images and labels must share dimensions")
    h, w = gen.shape

    aligned = gt.copy()
    offsets: dict[int, tuple[int, int]] = {}
    for r in np.unique(labels):
        if r == 0 or int(r) not in assignment:
            continue
        tmpl = _padded_template(assignment[int(r)], h, w, radius)
        ys, xs = np.nonzero(labels == r)
        gvals = gen[ys, xs]
        best, best_err = (0, 0), math.inf
        for dy, dx in _offsets(radius):
            err = float(np.mean(gvals != tmpl[ys + radius + dy, xs + radius + dx]))
            if err < best_err - 1e-15:
                best, best_err = (dy, dx), err
        dy, dx = best
        aligned[ys, xs] = tmpl[ys + radius + dy, xs + radius + dx]
        offsets[int(r)] = best

    fn = _METRICS[metric]
    return max(fn(gen, aligned), fn(gen, gt)), offsets


@dataclass
class PeriodCheck:
    expected: float
    measured: float
    error: float
    skipped: bool = False


def period_preservation(gen: np.ndarray, labels: np.ndarray,
                        assignment: dict[int, ToneSpec]) -> dict[int, PeriodCheck]:
    """|measured - expected| lattice period per periodic region; regions
    too small to measure come back flagged skipped, aperiodic tones are
    not checked at all.

    A square lattice admits two equivalent descriptions whose orientations
    differ by 45 degrees and whose spacings differ by sqrt(2); when the
    estimator reports the other family (phase seams can mask a stripe
    pattern's along-stripe flatness and flip the reading), the measured
    spacing is converted back before differencing.
    """
    gen = raster.as_bitonal(gen)
    labels = raster.as_labels(labels)
    out: dict[int, PeriodCheck] = {}
    for r, spec in assignment.items():
        if not spec.periodic:
            continue
        mask = labels == r
        if not mask.any():
            out[r] = PeriodCheck(spec.period_x, 0.0, float(spec.period_x), skipped=True)
            continue
        est = estimate_period(gen, mask)
        if est.indeterminate:
            out[r] = PeriodCheck(spec.period_x, 0.0, float(spec.period_x), skipped=True)
            continue
        measured = float(est.period_x if est.period_x > 0 else est.period_y)
        if measured > 0 and (est.orientation - spec.angle) % 90.0 == 45.0:
            measured /= math.sqrt(2.0)
        out[r] = PeriodCheck(float(spec.period_x), measured,
                             abs(measured - spec.period_x))
    return out


@dataclass
class LossWeights:
    """Combined-score coefficients; the adversarial slot is reserved for
    compatibility and its term is always zero in this engine."""

    tone: float = 10.0
    descriptor: float = 100.0
    attention: float = 5.0
    adversarial: float = 1.0


@dataclass
class MetricReport:
    tone_loss_total: float
    tone_loss_per_region: dict[int, float]
    tone_offsets: dict[int, tuple[int, int]]
    descriptor_loss: float
    attention_loss_unsup: float
    attention_loss_sup: float | None
    psnr: float
    ssim: float
    aligned_psnr: float
    aligned_ssim: float
    period_errors: dict[int, PeriodCheck]
    weights: LossWeights = field(default_factory=LossWeights)

    @property
    def combined(self) -> float:
        atn = self.attention_loss_sup if self.attention_loss_sup is not None \
            else self.attention_loss_unsup
        return (self.weights.tone * self.tone_loss_total
                + self.weights.descriptor * self.descriptor_loss
                + self.weights.attention * atn
                + self.weights.adversarial * 0.0)

    def to_dict(self) -> dict:
        return {
            "tone_loss_total": self.tone_loss_total,
            "tone_loss_per_region": {str(r): v for r, v in self.tone_loss_per_region.items()},
            "tone_offsets": {str(r): list(v) for r, v in self.tone_offsets.items()},
            "descriptor_loss": self.descriptor_loss,
            "attention_loss_unsup": self.attention_loss_unsup,
            "attention_loss_sup": self.attention_loss_sup,
            "psnr": self.psnr,
            "ssim": self.ssim,
            "aligned_psnr": self.aligned_psnr,
            "aligned_ssim": self.aligned_ssim,
            "combined": self.combined,
            "period_errors": {
                str(r): {"expected": c.expected, "measured": c.measured,
                         "error": c.error, "skipped": c.skipped}
                for r, c in self.period_errors.items()
            },
        }
