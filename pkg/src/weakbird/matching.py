"""Normalized cross-correlation template matching.

The correlation numerator is one FFT convolution with the zero-mean
template; per-window sums and sums of squares come from integral images.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve


@dataclass(frozen=True)
class MatchScore:
    value: float
    position: tuple | None = None


def _window_sums(a: np.ndarray, h: int, w: int) -> np.ndarray:
    """Sum of every ``h`` x ``w`` window of ``a`` (valid placements only)."""
    ii = np.zeros((a.shape[0] + 1, a.shape[1] + 1))
    np.cumsum(np.cumsum(a, axis=0), axis=1, out=ii[1:, 1:])
    return ii[h:, w:] - ii[:-h, w:] - ii[h:, :-w] + ii[:-h, :-w]


def ncc_map(template: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Correlation coefficient of ``template`` with every same-sized window of ``target``.

    Output shape is ``(H - h + 1, W - w + 1)``.  Windows with zero variance,
    or a constant template, score 0.
    """
    t = np.asarray(template, dtype=np.float64)
    img = np.asarray(target, dtype=np.float64)
    if t.ndim != 2 or img.ndim != 2 or t.size == 0:
        raise ValueError("template and target must be non-empty 2-D arrays")
    h, w = t.shape
    if h > img.shape[0] or w > img.shape[1]:
        raise ValueError(f"template {t.shape} larger than target {img.shape}")
    out_shape = (img.shape[0] - h + 1, img.shape[1] - w + 1)
    n = h * w

    tz = t - t.mean()
    t_ss = float(np.sum(tz * tz))
    if t_ss <= 1e-12 * max(float(np.sum(t * t)), 1e-300):
        return np.zeros(out_shape)

    # shifting the target leaves every score unchanged but tames cancellation
    img = img - img.mean()
    num = fftconvolve(img, tz[::-1, ::-1], mode="valid")
    s1 = _window_sums(img, h, w)
    s2 = _window_sums(img * img, h, w)
    win_ss = s2 - s1 * s1 / n

    scale = float(np.max(img * img)) if img.size else 0.0
    valid = win_ss > 1e-10 * n * scale
    out = np.zeros(out_shape)
    out[valid] = num[valid] / np.sqrt(win_ss[valid] * t_ss)
    return np.clip(out, -1.0, 1.0)


def ncc_direct(template: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Reference implementation: explicit loop over placements.  Slow."""
    t = np.asarray(template, dtype=np.float64)
    img = np.asarray(target, dtype=np.float64)
    h, w = t.shape
    tz = t - t.mean()
    t_norm = np.sqrt(np.sum(tz * tz))
    out = np.zeros((img.shape[0] - h + 1, img.shape[1] - w + 1))
    for r in range(out.shape[0]):
        for c in range(out.shape[1]):
            win = img[r : r + h, c : c + w]
            wz = win - win.mean()
            denom = t_norm * np.sqrt(np.sum(wz * wz))
            if denom > 0:
                out[r, c] = np.sum(tz * wz) / denom
    return out


def band_rows(bbox, n_rows: int, band_pad: int = 5) -> tuple:
    """Inclusive target row range searched for a segment with ``bbox``."""
    return max(bbox[0] - band_pad, 0), min(bbox[1] + band_pad, n_rows - 1)


def best_match(segment, target, band_pad: int = 5) -> MatchScore:
    """Best placement of ``segment.patch`` within the frequency band of ``target``.

    Only target rows within ``band_pad`` of the segment's bbox are read.
    A band or target too small for the template scores 0.
    """
    values = target.values if hasattr(target, "values") else np.asarray(target)
    patch = segment.patch
    lo, hi = band_rows(segment.bbox, values.shape[0], band_pad)
    band = values[lo : hi + 1]
    if band.shape[0] < patch.shape[0] or band.shape[1] < patch.shape[1]:
        return MatchScore(0.0, None)
    scores = ncc_map(patch, band)
    r, c = np.unravel_index(int(np.argmax(scores)), scores.shape)
    return MatchScore(float(scores[r, c]), (int(r + lo), int(c)))
