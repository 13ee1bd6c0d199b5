import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tonescale.tones import (
    CorpusItem,
    ToneSpec,
    build_corpus,
    generate_tone,
    lay_tones,
    load_corpus_item,
    load_manifest,
    manifest_digest,
    region_map,
    tone_table,
)


class TestToneSpec:
    def test_rejects_bad_fields(self):
        with pytest.raises(ValueError):
            ToneSpec("plaid")
        with pytest.raises(ValueError):
            ToneSpec("dots", duty=0.0)
        with pytest.raises(ValueError):
            ToneSpec("dots", duty=1.0)
        with pytest.raises(ValueError):
            ToneSpec("dots", period_x=1)
        with pytest.raises(ValueError):
            ToneSpec("dots", angle=180.0)

    def test_dict_roundtrip(self):
        spec = ToneSpec("stripes", 8, 8, 0.5, 45.0, (3.0, 7.0), seed=9)
        assert ToneSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


class TestGenerateTone:
    def test_stripes_closed_form(self):
        # vertical bands: ink iff (x mod 8) < 4
        spec = ToneSpec("stripes", 8, 8, 0.5, 0.0)
        tone = generate_tone(spec, 16, 16)
        expected = np.where((np.arange(16)[None, :] % 8) < 4, 0, 1)
        assert np.array_equal(tone, np.broadcast_to(expected, (16, 16)))

    def test_duty_below_pixel_quantum_is_all_paper(self):
        spec = ToneSpec("dots", 4, 4, 0.01, 0.0)
        assert (generate_tone(spec, 32, 32) == 1).all()

    def test_axis_aligned_period_translation(self):
        for spec in tone_table():
            if not spec.periodic or spec.angle not in (0.0, 90.0):
                continue
            base = generate_tone(spec, 48, 48)
            shifted = generate_tone(spec, 48, 48,
                                    origin=(spec.period_x, 0))
            wrapped = generate_tone(spec, 48 + spec.period_x, 48)
            assert np.array_equal(shifted, wrapped[:, spec.period_x:])
            assert np.array_equal(base, shifted)

    def test_diagonal_stripes_invariant_along_stripe(self):
        spec = ToneSpec("stripes", 8, 8, 0.5, 45.0)
        base = generate_tone(spec, 32, 32)
        # x+y is constant along (t, -t), so the pattern is too
        slid = generate_tone(spec, 32, 32, origin=(5, -5))
        assert np.array_equal(base, slid)

    def test_shift_is_exact_for_every_kind(self):
        specs = [
            ToneSpec("dots", 6, 6, 0.3, 0.0),
            ToneSpec("dots", 6, 6, 0.3, 45.0),
            ToneSpec("stripes", 8, 8, 0.5, 135.0),
            ToneSpec("grid", 8, 8, 0.4375, 0.0),
            ToneSpec("noise", 8, 8, 0.5, 0.0, seed=7),
        ]
        for spec in specs:
            big = generate_tone(spec, 48, 48, origin=(-8, -8))
            window = generate_tone(spec, 32, 32, origin=(3, 5))
            assert np.array_equal(window, big[13:45, 11:43]), spec.kind

    def test_ink_fraction_matches_duty_for_whole_catalog(self):
        for spec in tone_table():
            tone = generate_tone(spec, 256, 256)
            measured = float(np.mean(tone == 0))
            assert abs(measured - spec.duty) <= 0.05, spec

    def test_rejects_empty_canvas(self):
        with pytest.raises(ValueError):
            generate_tone(ToneSpec("dots"), 0, 8)


class TestRegionMap:
    def test_single_region(self):
        labels, lines = region_map(32, 32, 1, seed=0)
        assert (labels == 1).all()
        assert (lines == 1).all()

    def test_deterministic(self):
        a = region_map(96, 96, 4, seed=7)
        b = region_map(96, 96, 4, seed=7)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_region_areas_and_line_labels(self):
        labels, lines = region_map(128, 128, 4, seed=7)
        assert set(np.unique(labels)) == {0, 1, 2, 3, 4}
        for r in range(1, 5):
            assert (labels == r).sum() >= 0.01 * 128 * 128
        # line pixels carry label 0 and vice versa (interior lines only)
        assert (labels[lines == 0] == 0).all()
        assert (lines[labels == 0] == 0).all()

    def test_rejects_impossible_requests(self):
        with pytest.raises(ValueError):
            region_map(4, 4, 0, seed=0)
        with pytest.raises(ValueError):
            region_map(4, 4, 17, seed=0)


class TestLayTones:
    def test_single_region_equals_tone_with_lines(self):
        labels, lines = region_map(48, 48, 1, seed=1)
        spec = ToneSpec("stripes", 8, 8, 0.5, 0.0)
        out = lay_tones(labels, lines, {1: spec})
        assert np.array_equal(out, generate_tone(spec, 48, 48))

    def test_same_spec_is_continuous_across_regions(self):
        labels, lines = region_map(96, 96, 2, seed=3)
        spec = ToneSpec("dots", 6, 6, 0.3, 0.0)
        out = lay_tones(labels, lines, {1: spec, 2: spec})
        tone = generate_tone(spec, 96, 96)
        off_line = lines == 1
        assert np.array_equal(out[off_line], tone[off_line])
        assert (out[lines == 0] == 0).all()

    def test_region_independence(self):
        labels, lines = region_map(96, 96, 3, seed=5)
        a = ToneSpec("stripes", 8, 8, 0.5, 0.0)
        b = ToneSpec("dots", 6, 6, 0.3, 0.0)
        c = ToneSpec("grid", 8, 8, 0.4375, 0.0)
        out1 = lay_tones(labels, lines, {1: a, 2: b, 3: c})
        out2 = lay_tones(labels, lines, {1: a, 2: ToneSpec("noise", seed=4), 3: c})
        keep = (labels == 1) | (labels == 3)
        assert np.array_equal(out1[keep], out2[keep])

    def test_unassigned_label_raises(self):
        labels, lines = region_map(48, 48, 2, seed=2)
        with pytest.raises(ValueError):
            lay_tones(labels, lines, {1: ToneSpec("dots")})


class TestCatalog:
    def test_has_125_entries(self):
        assert len(tone_table()) == 125

    def test_entries_are_unique(self):
        table = tone_table()
        assert len(set(table)) == len(table)

    def test_checked_in_file_matches_derivation(self):
        from tonescale.tones import _table_specs
        assert tone_table() == _table_specs()


class TestCorpus:
    def test_build_and_reload(self, tmp_path):
        manifest = build_corpus(2, tmp_path / "c", canvas=160, seed=11)
        assert manifest["count"] == 2
        reloaded = load_manifest(tmp_path / "c")
        assert manifest_digest(reloaded) == manifest_digest(manifest)
        item = load_corpus_item(tmp_path / "c", reloaded["items"][0])
        assert isinstance(item, CorpusItem)
        assert item.manga.shape == (160, 160)
        regen = lay_tones(item.labels, item.lines, item.assignment)
        assert np.array_equal(regen, item.manga)

    def test_same_seed_same_digest(self, tmp_path):
        m1 = build_corpus(2, tmp_path / "a", canvas=128, seed=5)
        m2 = build_corpus(2, tmp_path / "b", canvas=128, seed=5)
        assert manifest_digest(m1) == manifest_digest(m2)

    def test_default_canvas_is_512(self, tmp_path):
        build_corpus(1, tmp_path / "d", seed=3)
        item = load_corpus_item(tmp_path / "d", load_manifest(tmp_path / "d")["items"][0])
        assert item.manga.shape == (512, 512)
        assert item.labels.shape == (512, 512)

    def test_count_zero_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            build_corpus(0, tmp_path / "e")


@settings(max_examples=30, deadline=None)
@given(
    kind=st.sampled_from(["dots", "stripes", "grid"]),
    period=st.sampled_from([4, 6, 8, 12]),
    duty=st.floats(0.1, 0.9),
    angle=st.sampled_from([0.0, 90.0]),
    ox=st.integers(-3, 3),
    oy=st.integers(-3, 3),
)
def test_axis_aligned_tones_tile(kind, period, duty, angle, ox, oy):
    spec = ToneSpec(kind, period, period, duty, angle)
    tone = generate_tone(spec, 3 * period, 3 * period, origin=(ox, oy))
    assert np.array_equal(tone[:period, :period], tone[period:2 * period, :period])
    assert np.array_equal(tone[:, :period], tone[:, period:2 * period])
