import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weakbird.matching import band_rows, best_match, ncc_direct, ncc_map

from .helpers import make_segment, spec


def oracle(template, target):
    """Pearson correlation per placement via np.corrcoef; constant windows score 0."""
    h, w = template.shape
    out = np.zeros((target.shape[0] - h + 1, target.shape[1] - w + 1))
    t = template.ravel()
    for r in range(out.shape[0]):
        for c in range(out.shape[1]):
            win = target[r : r + h, c : c + w].ravel()
            if np.ptp(win) == 0 or np.ptp(t) == 0:
                continue
            out[r, c] = np.corrcoef(t, win)[0, 1]
    return out


def test_matches_oracle_on_random_instances():
    rng = np.random.default_rng(1)
    for _ in range(20):
        target = rng.random((32, 32))
        template = rng.random((8, 8))
        np.testing.assert_allclose(ncc_map(template, target), oracle(template, target), atol=1e-9)


def test_direct_reference_agrees_with_oracle(rng):
    target = rng.random((12, 15))
    template = rng.random((4, 5))
    np.testing.assert_allclose(ncc_direct(template, target), oracle(template, target), atol=1e-12)


def test_output_shape():
    assert ncc_map(np.ones((3, 4)) + np.eye(3, 4), np.random.default_rng(0).random((10, 20))).shape == (8, 17)


def test_self_match_is_one(rng):
    target = rng.random((20, 30))
    out = ncc_map(target[5:12, 9:20], target)
    assert out[5, 9] == pytest.approx(1.0, abs=1e-12)
    assert np.unravel_index(np.argmax(out), out.shape) == (5, 9)


def test_anticorrelation_is_minus_one(rng):
    target = rng.random((20, 30))
    win = target[3:9, 4:14]
    out = ncc_map(2 * win.mean() - win, target)
    assert out[3, 4] == pytest.approx(-1.0, abs=1e-12)


def test_zero_variance_conventions(rng):
    assert not ncc_map(rng.random((3, 3)), np.zeros((8, 8))).any()
    assert not ncc_map(np.full((3, 3), 0.7), rng.random((8, 8))).any()
    target = rng.random((10, 10))
    target[:5, :5] = 0.25
    assert ncc_map(rng.random((3, 3)), target)[0, 0] == 0.0


def test_template_larger_than_target():
    with pytest.raises(ValueError):
        ncc_map(np.ones((5, 5)), np.ones((4, 9)))


@given(st.integers(0, 10_000), st.floats(0.01, 100), st.floats(-50, 50))
@settings(max_examples=40, deadline=None)
def test_affine_invariance_and_range(seed, a, b):
    rng = np.random.default_rng(seed)
    target = rng.random((16, 20))
    template = rng.random((5, 6))
    base = ncc_map(template, target)
    np.testing.assert_allclose(ncc_map(a * template + b, target), base, atol=1e-9)
    assert np.all(np.abs(base) <= 1.0)


def test_range_on_adversarial_inputs():
    rng = np.random.default_rng(3)
    target = np.full((30, 30), 0.05)
    target[10:12, 10:12] = 1.0
    target += 1e-9 * rng.random(target.shape)
    out = ncc_map(rng.random((4, 4)), target)
    assert np.all((out >= -1) & (out <= 1))


# -- best_match -----------------------------------------------------------------

def test_band_rows_clip():
    assert band_rows((10, 20, 0, 5), 100) == (5, 25)
    assert band_rows((2, 20, 0, 5), 22) == (0, 21)


def test_best_match_self(rng):
    values = rng.random((60, 80))
    seg = make_segment(values, (20, 29, 30, 44))
    score = best_match(seg, spec(values))
    assert score.value == pytest.approx(1.0, abs=1e-12)
    assert score.position == (20, 30)


def test_best_match_zero_target(rng):
    seg = make_segment(rng.random((40, 40)), (10, 19, 10, 19))
    assert best_match(seg, spec(np.zeros((40, 40)))).value == 0.0


def test_best_match_shifted_within_band(rng):
    values = rng.random((60, 80))
    seg = make_segment(values, (20, 29, 30, 44))
    target = 0.1 * rng.random((60, 80))
    target[23:33, 50:65] = seg.patch  # 3 rows higher, elsewhere in time
    score = best_match(seg, spec(target))
    assert score.value == pytest.approx(1.0, abs=1e-12)
    assert score.position == (23, 50)


def test_best_match_out_of_band_shift_not_found(rng):
    values = rng.random((60, 80))
    seg = make_segment(values, (20, 29, 30, 44))
    target = 0.1 * rng.random((60, 80))
    target[36:46, 50:65] = seg.patch  # 16 rows up: outside +-5
    assert best_match(seg, spec(target)).value < 0.9


def test_best_match_band_shorter_than_template(rng):
    seg = make_segment(rng.random((30, 30)), (0, 19, 0, 9))
    assert best_match(seg, spec(rng.random((12, 30)))).value == 0.0
    assert best_match(seg, spec(rng.random((30, 5)))).value == 0.0


@given(st.integers(0, 10_000), st.integers(0, 40), st.floats(1e3, 1e9))
@settings(max_examples=40, deadline=None)
def test_best_match_ignores_out_of_band_rows(seed, r0, poison):
    rng = np.random.default_rng(seed)
    values = rng.random((60, 50))
    seg = make_segment(values, (r0, r0 + 7, 10, 21))
    target = rng.random((60, 50))
    before = best_match(seg, spec(target))
    lo, hi = band_rows(seg.bbox, 60)
    poisoned = target.copy()
    poisoned[:lo] = poison * rng.random((lo, 50))
    poisoned[hi + 1 :] = poison
    after = best_match(seg, spec(poisoned))
    assert after == before
