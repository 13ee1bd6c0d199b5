"""Procedural screentone generation and synthetic corpus construction.

Every tone is a deterministic function on the infinite pixel plane,
sampled at integer coordinates.  That makes integer translations of a
tone exact: shifting a template never interpolates and never changes the
pattern, which the shift-tolerant metrics rely on.

The shipped catalog (``data/tone_table.json``, 125 entries) enumerates
dot, stripe, grid, and noise tones over periods {4, 6, 8, 12, 16} and a
range of ink duties and orientations.  Duties in the catalog are
quantized to pixel-attainable coverage per period so that the measured
ink fraction of a generated canvas matches the spec's duty closely.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import raster

KINDS = ("dots", "stripes", "grid", "noise")

# exact direction vectors for the supported lattice orientations; generic
# angles fall back to trig (axis-aligned exactness matters for duty
# calibration and shift-exact evaluation)
_EXACT_DIRS = {
    0.0: (1.0, 0.0),
    45.0: (math.sqrt(0.5), math.sqrt(0.5)),
    90.0: (0.0, 1.0),
    135.0: (-math.sqrt(0.5), math.sqrt(0.5)),
}


@dataclass(frozen=True)
class ToneSpec:
    """Parameters of one screentone pattern.

    phase is an (dx, dy) plane translation in pixels; seed only affects
    the noise kind.
    """

    kind: str
    period_x: int = 8
    period_y: int = 8
    duty: float = 0.5
    angle: float = 0.0
    phase: tuple[float, float] = (0.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown tone kind {self.kind!r}")
        if not 0.0 < self.duty < 1.0:
            raise ValueError(f"duty must lie in (0, 1), got {self.duty}")
        if self.period_x < 2 or self.period_y < 2:
            raise ValueError("periods must be >= 2 pixels")
        if not 0.0 <= self.angle < 180.0:
            raise ValueError(f"angle must lie in [0, 180), got {self.angle}")

    @property
    def periodic(self) -> bool:
        return self.kind != "noise"

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["phase"] = list(self.phase)
        return d

    @staticmethod
    def from_dict(d: dict) -> "ToneSpec":
        d = dict(d)
        d["phase"] = tuple(d.get("phase", (0.0, 0.0)))
        return ToneSpec(**d)


@dataclass
class CorpusItem:
    manga: np.ndarray
    labels: np.ndarray
    lines: np.ndarray
    assignment: dict[int, ToneSpec]


def _direction(angle: float) -> tuple[float, float]:
    if angle in _EXACT_DIRS:
        return _EXACT_DIRS[angle]
    rad = math.radians(angle)
    return (math.cos(rad), math.sin(rad))


def _rotated_coords(spec: ToneSpec, xs, ys):
    dx, dy = spec.phase
    px = xs - dx
    py = ys - dy
    cu, su = _direction(spec.angle)
    u = px * cu + py * su
    v = -px * su + py * cu
    return u, v


def _axis_aligned(spec: ToneSpec) -> bool:
    return spec.angle in (0.0, 90.0) and float(spec.phase[0]).is_integer() \
        and float(spec.phase[1]).is_integer()


def _stripe_width(period: int, duty: float) -> float:
    return duty * period


def _lattice_offset(coord: np.ndarray, period: int) -> np.ndarray:
    # signed offset to the nearest lattice point, half-way cases rounded up
    # (np.round's banker rounding would split ties inconsistently per cell)
    return coord - period * np.floor(coord / period + 0.5)


def _dot_threshold(spec: ToneSpec):
    """Ink rule for the dot lattice.

    Axis-aligned integer-phase lattices are calibrated by exact count: the
    round(duty*px*py) cell offsets nearest the lattice point (ties broken
    by polar angle) are inked, so the measured coverage equals duty to
    within half a pixel per cell.  Rotated lattices use the continuum
    disk radius, which integer sampling equidistributes over.
    """
    px, py = spec.period_x, spec.period_y
    k = int(round(spec.duty * px * py))
    if not _axis_aligned(spec):
        return ("radius", px * py * spec.duty / math.pi, 0.0)
    if k <= 0:
        return ("none", 0.0, 0.0)
    if k >= px * py:
        return ("all", 0.0, 0.0)
    ou = _lattice_offset(np.arange(px, dtype=np.float64), px)
    ov = _lattice_offset(np.arange(py, dtype=np.float64), py)
    gu, gv = np.meshgrid(ou, ov, indexing="ij")
    d2 = (gu * gu + gv * gv).ravel()
    psi = np.mod(np.arctan2(gv, gu).ravel(), 2.0 * math.pi)
    order = np.lexsort((psi, d2))
    cut = order[k - 1]
    return ("count", float(d2[cut]), float(psi[cut]))


_NOISE_MUL1 = np.uint64(0x9E3779B97F4A7C15)
_NOISE_MUL2 = np.uint64(0xC2B2AE3D27D4EB4F)


def _noise_uniform(xs, ys, seed: int):
    """Counter-based hash of (x, y, seed) -> uniform [0, 1); a true plane
    function, so noise tones shift exactly like periodic ones."""
    with np.errstate(over="ignore"):
        hx = xs.astype(np.int64).astype(np.uint64) * _NOISE_MUL1
        hy = ys.astype(np.int64).astype(np.uint64) * _NOISE_MUL2
        h = hx ^ hy ^ (np.uint64(seed & 0xFFFFFFFFFFFFFFFF) * _NOISE_MUL2)
        h ^= h >> np.uint64(30)
        h *= np.uint64(0xBF58476D1CE4E5B9)
        h ^= h >> np.uint64(27)
        h *= np.uint64(0x94D049BB133111EB)
        h ^= h >> np.uint64(31)
    return h.astype(np.float64) / float(2**64)


def tone_plane(spec: ToneSpec, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Evaluate a tone at arbitrary integer plane coordinates (0=ink)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)

    if spec.kind == "noise":
        ink = _noise_uniform(np.asarray(xs), np.asarray(ys), spec.seed) < spec.duty
        return np.where(ink, 0, 1).astype(np.uint8)

    u, v = _rotated_coords(spec, xs, ys)

    if spec.kind == "stripes":
        ink = np.mod(u, spec.period_x) < _stripe_width(spec.period_x, spec.duty)
    elif spec.kind == "grid":
        # union of two perpendicular stripe families of equal width
        w = spec.period_x - spec.period_x * math.sqrt(max(1.0 - spec.duty, 0.0))
        ink = (np.mod(u, spec.period_x) < w) | (np.mod(v, spec.period_y) < w)
    elif spec.kind == "dots":
        ou = _lattice_offset(u, spec.period_x)
        ov = _lattice_offset(v, spec.period_y)
        d2 = ou * ou + ov * ov
        mode, t1, t2 = _dot_threshold(spec)
        if mode == "radius":
            ink = d2 < t1
        elif mode == "none":
            ink = np.zeros(d2.shape, dtype=bool)
        elif mode == "all":
            ink = np.ones(d2.shape, dtype=bool)
        else:
            psi = np.mod(np.arctan2(ov, ou), 2.0 * math.pi)
            ink = (d2 < t1) | ((d2 == t1) & (psi <= t2))
    else:  # pragma: no cover - guarded by ToneSpec validation
        raise ValueError(spec.kind)

    return np.where(ink, 0, 1).astype(np.uint8)


def generate_tone(spec: ToneSpec, width: int, height: int,
                  origin: tuple[int, int] = (0, 0)) -> np.ndarray:
    """Render a tone window; origin=(ox, oy) places pixel (0,0) at that
    plane coordinate, so shifted windows are exact translations."""
    if width < 1 or height < 1:
        raise ValueError("tone canvas must be at least 1x1")
    ox, oy = origin
    xs = np.arange(width, dtype=np.int64) + int(ox)
    ys = np.arange(height, dtype=np.int64) + int(oy)
    return tone_plane(spec, xs[None, :], ys[:, None])


def _table_specs() -> list[ToneSpec]:
    """Derivation of the 125-entry catalog (see data/tone_table.json)."""
    specs: list[ToneSpec] = []
    periods = (4, 6, 8, 12, 16)

    # 50 dot tones: coverage snapped to an exact per-cell pixel count
    for p in periods:
        for target in (0.2, 0.3, 0.4, 0.5, 0.6):
            for angle in (0.0, 45.0):
                if angle == 0.0:
                    duty = round(target * p * p) / (p * p)
                else:
                    duty = target
                specs.append(ToneSpec("dots", p, p, duty, angle))

    # 60 stripe tones: duty = integer stripe width / period
    for p in periods:
        widths = sorted({max(1, round(0.3 * p)), round(0.5 * p),
                         min(p - 1, round(0.7 * p))})
        for w in widths:
            for angle in (0.0, 45.0, 90.0, 135.0):
                specs.append(ToneSpec("stripes", p, p, w / p, angle))

    # 10 grid tones: duty = exact union coverage of two width-w families
    for p in periods:
        w_lo = max(1, round(p * (1.0 - math.sqrt(0.6))))
        w_hi = max(w_lo + 1, round(p * (1.0 - math.sqrt(0.4))))
        for w in (w_lo, w_hi):
            duty = (2 * w * p - w * w) / (p * p)
            specs.append(ToneSpec("grid", p, p, duty, 0.0))

    # 5 aperiodic noise tones
    for i, duty in enumerate((0.2, 0.35, 0.5, 0.65, 0.8)):
        specs.append(ToneSpec("noise", 8, 8, duty, 0.0, seed=1001 + i))

    return specs


def tone_table() -> list[ToneSpec]:
    """Load the enumerated 125-entry tone catalog shipped with the package."""
    text = resources.files("tonescale").joinpath("data/tone_table.json").read_text()
    return [ToneSpec.from_dict(d) for d in json.loads(text)]


_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


def _carve_lines(labels: np.ndarray) -> np.ndarray:
    """Mark both sides of every region boundary (2 px thick lines)."""
    line = np.zeros(labels.shape, dtype=bool)
    line[:, :-1] |= labels[:, :-1] != labels[:, 1:]
    line[:, 1:] |= labels[:, :-1] != labels[:, 1:]
    line[:-1, :] |= labels[:-1, :] != labels[1:, :]
    line[1:, :] |= labels[:-1, :] != labels[1:, :]
    return line


def region_map(width: int, height: int, n_regions: int, seed: int,
               max_attempts: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Voronoi partition into n_regions labeled cells with 2 px boundary lines.

    Returns (labels, lines): labels carry ids 1..n_regions with id 0 on
    line pixels; lines use 0 = line ink, 1 = background.  Sites are
    redrawn (deterministically) until every region is 4-connected and
    reasonably sized.
    """
    if n_regions < 1:
        raise ValueError("n_regions must be >= 1")
    if n_regions > width * height:
        raise ValueError("more regions than pixels")

    if n_regions == 1:
        labels = np.ones((height, width), dtype=np.int32)
        lines = np.ones((height, width), dtype=np.uint8)
        return labels, lines

    rng = np.random.default_rng(seed)
    min_area = max(64, int(0.01 * width * height))
    min_extent = min(24, width // 2, height // 2)
    ys_grid, xs_grid = np.mgrid[0:height, 0:width]

    for _ in range(max_attempts):
        sy = rng.uniform(height * 0.08, height * 0.92, size=n_regions)
        sx = rng.uniform(width * 0.08, width * 0.92, size=n_regions)
        d2 = (ys_grid[None] - sy[:, None, None]) ** 2 \
            + (xs_grid[None] - sx[:, None, None]) ** 2
        labels = np.argmin(d2, axis=0).astype(np.int32) + 1

        line = _carve_lines(labels)
        carved = labels.copy()
        carved[line] = 0

        ok = True
        for r in range(1, n_regions + 1):
            mask = carved == r
            if mask.sum() < min_area:
                ok = False
                break
            rows = np.flatnonzero(mask.any(axis=1))
            cols = np.flatnonzero(mask.any(axis=0))
            if (rows[-1] - rows[0] + 1) < min_extent or (cols[-1] - cols[0] + 1) < min_extent:
                ok = False
                break
            _, n_comp = ndimage.label(mask, structure=_FOUR_CONN)
            if n_comp != 1:
                ok = False
                break
        if ok:
            lines = np.where(line, 0, 1).astype(np.uint8)
            return carved, lines

    raise RuntimeError(f"could not place {n_regions} well-formed regions "
                       f"on a {width}x{height} canvas (seed {seed})")


def lay_tones(labels: np.ndarray, lines: np.ndarray,
              assignment: dict[int, ToneSpec]) -> np.ndarray:
    """Fill each labeled region with its tone, evaluated at global
    coordinates, then overlay line pixels as ink."""
    labels = raster.as_labels(labels)
    lines = raster.as_bitonal(lines)
    if labels.shape != lines.shape:
        raise ValueError("labels and lines must share dimensions")
    present = np.unique(labels)
    missing = [int(r) for r in present if r != 0 and int(r) not in assignment]
    if missing:
        raise ValueError(f"no tone assigned to labels {missing}")

    h, w = labels.shape
    out = np.ones((h, w), dtype=np.uint8)
    rendered: dict[ToneSpec, np.ndarray] = {}
    for r in present:
        if r == 0:
            continue
        spec = assignment[int(r)]
        if spec not in rendered:
            rendered[spec] = generate_tone(spec, w, h)
        mask = labels == r
        out[mask] = rendered[spec][mask]
    out[lines == 0] = 0
    return out


def _draw_assignment(rng: np.random.Generator, table: list[ToneSpec],
                     n_regions: int) -> dict[int, ToneSpec]:
    assignment = {}
    for r in range(1, n_regions + 1):
        entry = table[int(rng.integers(len(table)))]
        phase = (float(rng.integers(0, 32)), float(rng.integers(0, 32)))
        assignment[r] = dataclasses.replace(
            entry, phase=phase, seed=int(rng.integers(2**31)))
    return assignment


def build_corpus(count: int, out_dir, canvas: int = 512, seed: int = 0) -> dict:
    """Generate `count` synthetic manga triplets plus a manifest.

    Layout: NNNN_manga.png, NNNN_labels.png, NNNN_lines.png and
    manifest.json holding the tone catalog, per-item assignments and
    seeds.  Item seeds derive as seed+index, so rebuilds (serial or
    parallel) are bit-identical.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = tone_table()

    items = []
    for i in range(count):
        rng = np.random.default_rng(seed + i)
        n_regions = int(rng.integers(3, 9))
        region_seed = int(rng.integers(2**31))
        labels, lines = region_map(canvas, canvas, n_regions, region_seed)
        assignment = _draw_assignment(rng, table, n_regions)
        manga = lay_tones(labels, lines, assignment)

        stem = f"{i:04d}"
        raster.save_bitonal(manga, out_dir / f"{stem}_manga.png")
        raster.save_labels(labels, out_dir / f"{stem}_labels.png")
        raster.save_bitonal(lines, out_dir / f"{stem}_lines.png")
        items.append({
            "id": stem,
            "n_regions": n_regions,
            "region_seed": region_seed,
            "assignment": {str(r): s.to_dict() for r, s in assignment.items()},
        })

    manifest = {
        "canvas": canvas,
        "count": count,
        "seed": seed,
        "tone_table": [s.to_dict() for s in table],
        "items": items,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest


def manifest_digest(manifest: dict) -> str:
    return hashlib.sha256(
        json.dumps(manifest, sort_keys=True).encode()).hexdigest()


def load_corpus_item(corpus_dir, item: dict) -> CorpusItem:
    corpus_dir = Path(corpus_dir)
    stem = item["id"]
    return CorpusItem(
        manga=raster.load_bitonal(corpus_dir / f"{stem}_manga.png"),
        labels=raster.load_labels(corpus_dir / f"{stem}_labels.png"),
        lines=raster.load_bitonal(corpus_dir / f"{stem}_lines.png"),
        assignment={int(r): ToneSpec.from_dict(d)
                    for r, d in item["assignment"].items()},
    )


def load_manifest(corpus_dir) -> dict:
    with open(Path(corpus_dir) / "manifest.json") as fh:
        return json.load(fh)
