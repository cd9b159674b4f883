"""Unsupervised detection of vocalization segments in a spectrogram.

The mask pipeline is median clipping followed by a fixed sequence of binary
morphology steps; every surviving 8-connected component becomes a
:class:`Segment` with a padded bounding box.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .spectrogram import Spectrogram, SpectrogramParams, prepare


@dataclass(frozen=True)
class SegmentationParams:
    clip_factor: float = 3.0
    close_size: int = 3
    first_min_size: int = 10
    dilate_size: int = 4
    median_size: int = 3
    second_min_size: int = 100
    pad: int = 5
    connectivity: int = 8

    def __post_init__(self):
        if self.connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")


@dataclass(frozen=True, eq=False)
class Segment:
    """One detected component.

    ``bbox`` is ``(row_min, row_max, col_min, col_max)``, inclusive, already
    padded and clipped.  ``pixel_count`` is the size of the unpadded
    component and ``patch`` the spectrogram values under ``bbox``.
    """
    id: str
    recording_id: str
    bbox: tuple
    pixel_count: int
    patch: np.ndarray

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "recording_id": self.recording_id,
            "bbox": [int(b) for b in self.bbox],
            "pixel_count": int(self.pixel_count),
        }


def _structure(connectivity: int) -> np.ndarray:
    return ndimage.generate_binary_structure(2, 2 if connectivity == 8 else 1)


def _square(size: int) -> np.ndarray:
    return np.ones((size, size), dtype=bool)


def median_clip(spec, factor: float = 3.0) -> np.ndarray:
    """Mark pixels above ``factor`` times both their row and column medians.

    A zero median degrades the test to ``value > 0``.
    """
    v = spec.values if isinstance(spec, Spectrogram) else np.asarray(spec, dtype=np.float64)
    row_med = np.median(v, axis=1, keepdims=True)
    col_med = np.median(v, axis=0, keepdims=True)
    return (v > factor * row_med) & (v > factor * col_med)


def morph_dilate(mask: np.ndarray, se) -> np.ndarray:
    se = _square(se) if np.isscalar(se) else np.asarray(se, dtype=bool)
    return ndimage.binary_dilation(mask, structure=se)


def morph_close(mask: np.ndarray, se) -> np.ndarray:
    """Binary closing on an unbounded zero background.

    The mask is padded before dilating so components touching the image
    border are not eaten by the erosion step; closing stays extensive.
    """
    se = _square(se) if np.isscalar(se) else np.asarray(se, dtype=bool)
    m = max(se.shape)
    padded = np.pad(np.asarray(mask, dtype=bool), m)
    closed = ndimage.binary_erosion(ndimage.binary_dilation(padded, structure=se), structure=se)
    return closed[m:-m, m:-m]


def median_filter(mask: np.ndarray, window: int = 3) -> np.ndarray:
    """Majority vote over a ``window`` x ``window`` neighbourhood; ties go to 1.

    Pixels outside the image count as 0.
    """
    counts = ndimage.correlate(
        np.asarray(mask, dtype=np.int32), np.ones((window, window), dtype=np.int32),
        mode="constant", cval=0,
    )
    return 2 * counts >= window * window


def remove_small_objects(mask: np.ndarray, min_size: int, connectivity: int = 8) -> np.ndarray:
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    mask = np.asarray(mask, dtype=bool)
    labels, n = ndimage.label(mask, structure=_structure(connectivity))
    if n == 0:
        return mask.copy()
    sizes = np.bincount(labels.ravel())
    keep = sizes >= min_size
    keep[0] = False
    return keep[labels]


def clean_mask(mask: np.ndarray, params: SegmentationParams = SegmentationParams()) -> np.ndarray:
    """Morphology chain applied to the clipped mask."""
    p = params
    m = morph_close(mask, p.close_size)
    m = remove_small_objects(m, p.first_min_size, p.connectivity)
    m = morph_dilate(m, p.dilate_size)
    m = median_filter(m, p.median_size)
    m = remove_small_objects(m, p.second_min_size, p.connectivity)
    return morph_dilate(m, p.dilate_size)


def extract_segments(mask: np.ndarray, spec: Spectrogram, pad: int = 5, connectivity: int = 8) -> list:
    if mask.shape != spec.values.shape:
        raise ValueError(f"mask shape {mask.shape} != spectrogram shape {spec.values.shape}")
    labels, n = ndimage.label(mask, structure=_structure(connectivity))
    if n == 0:
        return []
    sizes = np.bincount(labels.ravel())
    n_rows, n_cols = mask.shape
    found = []
    for k, sl in enumerate(ndimage.find_objects(labels), start=1):
        r0 = max(sl[0].start - pad, 0)
        r1 = min(sl[0].stop - 1 + pad, n_rows - 1)
        c0 = max(sl[1].start - pad, 0)
        c1 = min(sl[1].stop - 1 + pad, n_cols - 1)
        found.append(((r0, r1, c0, c1), int(sizes[k]), (sl[1].start, sl[0].start)))
    # time order reads naturally; ties broken by frequency
    found.sort(key=lambda f: f[2])
    rid = spec.recording_id
    return [
        Segment(
            id=f"{rid}:{i:03d}",
            recording_id=rid,
            bbox=bbox,
            pixel_count=size,
            patch=spec.values[bbox[0] : bbox[1] + 1, bbox[2] : bbox[3] + 1].copy(),
        )
        for i, (bbox, size, _) in enumerate(found)
    ]


def segment_spectrogram(spec: Spectrogram, params: SegmentationParams = SegmentationParams()) -> list:
    """Segment an already normalized and cropped spectrogram."""
    mask = clean_mask(median_clip(spec, params.clip_factor), params)
    return extract_segments(mask, spec, params.pad, params.connectivity)


def segment_recording(
    recording,
    spec_params: SpectrogramParams = SpectrogramParams(),
    params: SegmentationParams = SegmentationParams(),
) -> list:
    return segment_spectrogram(prepare(recording, spec_params), params)


def write_segments(segments, fh) -> None:
    """JSON Lines, one object per segment.  Patches are not stored."""
    for seg in segments:
        fh.write(json.dumps(seg.to_json(), sort_keys=True) + "\n")


def read_segments(fh, spectra) -> dict:
    """Inverse of :func:`write_segments`; patches are cut again from ``spectra``.

    Returns ``{recording_id: [Segment, ...]}`` in file order.
    """
    out = {}
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        rid = obj["recording_id"]
        if rid not in spectra:
            raise KeyError(f"line {lineno}: unknown recording {rid!r}")
        r0, r1, c0, c1 = (int(b) for b in obj["bbox"])
        patch = spectra[rid].values[r0 : r1 + 1, c0 : c1 + 1].copy()
        out.setdefault(rid, []).append(
            Segment(obj["id"], rid, (r0, r1, c0, c1), int(obj["pixel_count"]), patch)
        )
    return out
