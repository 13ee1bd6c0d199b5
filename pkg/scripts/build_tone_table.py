#!/usr/bin/env python3
"""Regenerate the enumerated tone catalog at src/tonescale/data/tone_table.json.

The catalog is a checked-in data file so experiments stay reproducible;
this script rewrites it from the derivation in tonescale.tones and
reports the measured ink coverage of every entry.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

import numpy as np

from tonescale.tones import _table_specs, generate_tone


def main():
    specs = _table_specs()
    out = Path(__file__).resolve().parents[1] / "src/tonescale/data/tone_table.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps([s.to_dict() for s in specs], indent=2) + "\n")
    print(f"wrote {len(specs)} tone specs to {out}")

    worst = 0.0
    for s in specs:
        tone = generate_tone(s, 256, 256)
        measured = float(np.mean(tone == 0))
        err = abs(measured - s.duty)
        worst = max(worst, err)
        flag = " <-- off" if err > 0.05 else ""
        print(f"  {s.kind:7s} p={s.period_x:2d} angle={s.angle:5.1f} "
              f"duty={s.duty:.4f} measured={measured:.4f} err={err:.4f}{flag}")
    print(f"worst |measured - duty| = {worst:.4f}")


if __name__ == "__main__":
    main()
