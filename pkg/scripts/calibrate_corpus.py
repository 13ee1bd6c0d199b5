#!/usr/bin/env python3
"""Pre-acceptance oracle run: measure pipeline vs baseline on a fresh
synthetic corpus and print the statistics the acceptance thresholds
assert (period preservation at k=0.5, aligned-PSNR win rates).

Usage: python scripts/calibrate_corpus.py [count] [canvas]
"""

import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from tonescale import raster
from tonescale.evaluate import ground_truth_at_scale
from tonescale.metrics import aligned_metric, period_preservation, psnr
from tonescale.pipeline import RetargetConfig, bilinear_baseline, retarget
from tonescale.tones import build_corpus, load_corpus_item, load_manifest


def main():
    count = int(sys.argv[1]) if len(sys.argv) > 1 else 50
    canvas = int(sys.argv[2]) if len(sys.argv) > 2 else 512
    corpus = Path(f"/tmp/tonescale_calib_{count}_{canvas}")
    if not (corpus / "manifest.json").exists():
        t0 = time.time()
        build_corpus(count, corpus, canvas=canvas, seed=7)
        print(f"built {count}-item corpus in {time.time() - t0:.1f}s")
    manifest = load_manifest(corpus)

    # --- period preservation at k = 0.5 ---
    t0 = time.time()
    pipe_ok = pipe_tot = 0
    base_bad = base_tot = 0
    for entry in manifest["items"]:
        item = load_corpus_item(corpus, entry)
        cfg = RetargetConfig(scale=0.5, phi_mode="label")
        res = retarget(item.manga, item.lines, item.labels, cfg)
        checks = period_preservation(res.output, res.resampled_labels, item.assignment)
        for c in checks.values():
            if not c.skipped:
                pipe_tot += 1
                pipe_ok += c.error <= 1.0
        base = bilinear_baseline(item.manga, 0.5)
        labels_t = raster.resample_nearest(item.labels, 0.5)
        bchecks = period_preservation(base, labels_t, item.assignment)
        for r, c in bchecks.items():
            if not c.skipped and item.assignment[r].period_x >= 6:
                base_tot += 1
                base_bad += c.error >= 2.0
    dt = time.time() - t0
    print(f"[k=0.5] pipeline |dp|<=1: {pipe_ok}/{pipe_tot} = {pipe_ok/pipe_tot:.1%}"
          f"   baseline |dp|>=2 (p>=6): {base_bad}/{base_tot} = {base_bad/base_tot:.1%}"
          f"   ({dt:.0f}s)")

    # --- aligned-PSNR win rate over scales ---
    t0 = time.time()
    wins = pairs = invariant_ok = 0
    for entry in manifest["items"]:
        item = load_corpus_item(corpus, entry)
        for k in (0.5, 0.75, 1.25):
            cfg = RetargetConfig(scale=k, phi_mode="label")
            res = retarget(item.manga, item.lines, item.labels, cfg)
            gt_img, labels_t, _ = ground_truth_at_scale(item, k)
            p_al, _ = aligned_metric(res.output, gt_img, labels_t, item.assignment)
            base = bilinear_baseline(item.manga, k)
            b_al, _ = aligned_metric(base, gt_img, labels_t, item.assignment)
            pairs += 1
            wins += p_al >= b_al
            invariant_ok += (p_al >= psnr(res.output, gt_img)
                             and b_al >= psnr(base, gt_img))
    dt = time.time() - t0
    print(f"[scales 0.5/0.75/1.25] aligned-PSNR wins: {wins}/{pairs} = {wins/pairs:.1%}"
          f"   aligned>=unaligned: {invariant_ok}/{pairs}   ({dt:.0f}s)")


if __name__ == "__main__":
    main()
