import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakbird.segmentation import Segment
from weakbird.spectrogram import Spectrogram
from weakbird.synthgen import (
    SynthesisError, SyntheticConfig, boxes_overlap, build_synthetic_corpus, load_synthetic,
    paste_patch, save_synthetic, synthesize,
)

from .helpers import make_segment, spec

N_ROWS, N_COLS = 40, 120


def _fake_source(n_labels=6, seed=0):
    """Spectral-domain source: noise backgrounds plus one segment per single-label recording."""
    rng = np.random.default_rng(seed)
    spectra, labels, segments = {}, {}, {}
    for k in range(2):
        rid = f"noise{k}"
        spectra[rid] = spec(0.05 * rng.random((N_ROWS, 200)), rid)
        labels[rid] = frozenset()
    for i in range(n_labels):
        lab = f"L{i}"
        rid = f"{lab}_rec"
        values = 0.05 * rng.random((N_ROWS, 200))
        r0 = 2 + 5 * i % (N_ROWS - 8)
        values[r0 : r0 + 5, 30 : 30 + 8 + i] = 0.5 + 0.5 * rng.random((5, 8 + i))
        spectra[rid] = spec(values, rid)
        labels[rid] = frozenset([lab])
        segments[rid] = [make_segment(values, (r0, r0 + 4, 30, 37 + i), rid, f"{rid}:000")]
    labels["mix"] = frozenset(["L0", "L1"])
    spectra["mix"] = spec(rng.random((N_ROWS, 200)), "mix")
    return spectra, labels, segments


def _synth(seed=0, **kw):
    spectra, labels, segments = _fake_source()
    cfg = SyntheticConfig(recording_count=kw.pop("count", 10), rng_seed=seed,
                          labels_min=kw.pop("lo", 2), labels_max=kw.pop("hi", 4), **kw)
    return synthesize(spectra, labels, segments, cfg, N_COLS, seg_params=None)


def test_paste_patch_pointwise_max_and_renormalize():
    bg = spec(np.full((4, 5), 0.5))
    out = paste_patch(bg, np.array([[0.2, 2.0]]), (1, 3))
    expected = np.full((4, 5), 0.25)
    expected[1, 4] = 1.0
    np.testing.assert_allclose(out.values, expected)
    assert bg.values.max() == 0.5  # input untouched


def test_paste_patch_must_fit():
    with pytest.raises(ValueError):
        paste_patch(spec(np.ones((4, 5))), np.ones((2, 2)), (3, 0))
    with pytest.raises(ValueError):
        paste_patch(spec(np.ones((4, 5))), np.ones((2, 2)), (0, -1))


@given(
    st.tuples(*[st.integers(0, 10)] * 4), st.tuples(*[st.integers(0, 10)] * 4),
)
def test_boxes_overlap_matches_pixel_sets(a, b):
    a = (min(a[0], a[1]), max(a[0], a[1]), min(a[2], a[3]), max(a[2], a[3]))
    b = (min(b[0], b[1]), max(b[0], b[1]), min(b[2], b[3]), max(b[2], b[3]))
    grid_a = np.zeros((11, 11), bool)
    grid_b = np.zeros((11, 11), bool)
    grid_a[a[0] : a[1] + 1, a[2] : a[3] + 1] = True
    grid_b[b[0] : b[1] + 1, b[2] : b[3] + 1] = True
    assert boxes_overlap(a, b) == bool((grid_a & grid_b).any())


def test_same_seed_same_corpus():
    a, b = _synth(3), _synth(3)
    assert a.labels == b.labels and a.truth == b.truth
    for rid in a.spectra:
        np.testing.assert_array_equal(a.spectra[rid].values, b.spectra[rid].values)
    assert _synth(4).truth != a.truth


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_ground_truth_invariants(seed):
    syn = _synth(seed)
    spectra, labels, segments = _fake_source()
    by_id = {s.id: s for ss in segments.values() for s in ss}
    for rid, plants in syn.truth.items():
        assert syn.spectra[rid].values.shape == (N_ROWS, N_COLS)
        assert syn.spectra[rid].values.max() == pytest.approx(1.0)
        assert 2 <= len(plants) <= 4
        assert {p.label for p in plants} == syn.labels[rid]
        for i, p in enumerate(plants):
            src = by_id[p.source_segment]
            assert labels[p.source_recording] == frozenset([p.label])
            # rows preserved, size preserved
            assert (p.bbox[0], p.bbox[1]) == src.bbox[:2]
            assert p.bbox[3] - p.bbox[2] == src.bbox[3] - src.bbox[2]
            assert 0 <= p.bbox[2] and p.bbox[3] < N_COLS
            for q in plants[i + 1 :]:
                assert not boxes_overlap(p.bbox, q.bbox)
        assert syn.exclusions[rid] == {p.source_recording for p in plants}


def test_plant_pixels_dominate_background():
    syn = _synth(1, count=3)
    spectra, _, segments = _fake_source()
    by_id = {s.id: s for ss in segments.values() for s in ss}
    for rid, plants in syn.truth.items():
        vals = syn.spectra[rid].values
        bg_id, start = syn.background[rid]
        raw = spectra[bg_id].values[:, start : start + N_COLS].copy()
        for p in plants:
            r0, r1, c0, c1 = p.bbox
            region = vals[r0 : r1 + 1, c0 : c1 + 1]
            # ratio to the pasted patch is one global scale factor
            ratio = region / np.maximum(by_id[p.source_segment].patch, raw[r0 : r1 + 1, c0 : c1 + 1]
                                        / raw.max())
            assert np.ptp(ratio) < 1e-9 or np.allclose(ratio, ratio.flat[0])


def test_errors():
    spectra, labels, segments = _fake_source(n_labels=3)
    with pytest.raises(SynthesisError):
        synthesize(spectra, labels, segments, SyntheticConfig(labels_max=5), N_COLS, None)
    no_noise = {k: v for k, v in labels.items() if v}
    with pytest.raises(SynthesisError):
        synthesize(spectra, no_noise, segments, SyntheticConfig(labels_max=2), N_COLS, None)
    with pytest.raises(ValueError):
        SyntheticConfig(labels_min=3, labels_max=2)
    with pytest.raises(ValueError):
        SyntheticConfig(recording_count=0)


def test_min_segment_px_filters_labels():
    spectra, labels, segments = _fake_source(n_labels=6)
    # segment i has 5 * (8 + i) pixels; keep only i >= 3
    cfg = SyntheticConfig(recording_count=5, labels_min=2, labels_max=3, min_segment_px=55)
    syn = synthesize(spectra, labels, segments, cfg, N_COLS, None)
    used = set().union(*syn.labels.values())
    assert used <= {"L3", "L4", "L5"}
    with pytest.raises(SynthesisError):
        synthesize(spectra, labels, segments, SyntheticConfig(labels_max=4, min_segment_px=55),
                   N_COLS, None)


def test_save_load_roundtrip(tmp_path):
    syn = _synth(2, count=4)
    save_synthetic(syn, tmp_path)
    back = load_synthetic(tmp_path)
    assert back.labels == syn.labels
    assert back.truth == syn.truth
    assert back.background == syn.background
    for rid in syn.spectra:
        np.testing.assert_array_equal(back.spectra[rid].values, syn.spectra[rid].values)
        assert back.spectra[rid].row_offset == syn.spectra[rid].row_offset


def test_build_from_audio_corpus(small_toy_corpus):
    cfg = SyntheticConfig(recording_count=4, labels_min=2, labels_max=3, duration_s=2.0, rng_seed=5)
    syn = build_synthetic_corpus(small_toy_corpus, cfg)
    n_cols = syn.spectra["synth0"].values.shape[1]
    assert n_cols == (2 * 22050 - 512) // 128 + 1
    assert set(syn.plantedness) == set(syn.truth)
    assert all(len(v) == len(syn.truth[rid]) for rid, v in syn.plantedness.items())
    # most plants are recoverable by the segmenter
    flags = [f for v in syn.plantedness.values() for f in v]
    assert sum(flags) >= 0.75 * len(flags)
