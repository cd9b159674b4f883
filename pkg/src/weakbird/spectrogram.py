"""Magnitude spectrograms: STFT, peak normalization and band cropping."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

CROP_LOW = 4
CROP_HIGH = 24


@dataclass(frozen=True)
class SpectrogramParams:
    window_size: int = 512
    hop: int = 128
    window_fn: str = "hann"

    def __post_init__(self):
        w = self.window_size
        if w <= 0 or w & (w - 1):
            raise ValueError(f"window_size must be a power of two, got {w}")
        if not 0 < self.hop <= w:
            raise ValueError(f"hop must be in (0, window_size], got {self.hop}")

    @property
    def n_bins(self) -> int:
        return self.window_size // 2 + 1

    def n_frames(self, n_samples: int) -> int:
        if n_samples < self.window_size:
            return 0
        return (n_samples - self.window_size) // self.hop + 1


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Rows are frequency bins from low to high, columns are time frames.

    ``row_offset`` counts bins removed from the bottom by :func:`crop_rows`,
    so ``values[r]`` is STFT bin ``r + row_offset``.
    """
    values: np.ndarray
    params: SpectrogramParams = SpectrogramParams()
    row_offset: int = 0
    recording_id: str = ""

    @property
    def shape(self):
        return self.values.shape


def compute_spectrogram(recording, params: SpectrogramParams = SpectrogramParams()) -> Spectrogram:
    samples = np.asarray(recording.samples, dtype=np.float64)
    if samples.shape[0] < params.window_size:
        raise ValueError(
            f"recording {recording.id!r} has {samples.shape[0]} samples, "
            f"shorter than one window ({params.window_size})"
        )
    frames = sliding_window_view(samples, params.window_size)[:: params.hop]
    taper = get_window(params.window_fn, params.window_size, fftbins=True)
    mags = np.abs(np.fft.rfft(frames * taper, axis=1))
    return Spectrogram(np.ascontiguousarray(mags.T), params, 0, recording.id)


def normalize(spec: Spectrogram) -> Spectrogram:
    """Scale so the global maximum is exactly 1.0; silent input is returned as is."""
    peak = spec.values.max() if spec.values.size else 0.0
    if peak <= 0:
        return spec
    return replace(spec, values=spec.values / peak)


def crop_rows(spec: Spectrogram, low: int = CROP_LOW, high: int = CROP_HIGH) -> Spectrogram:
    n_rows = spec.values.shape[0]
    if n_rows <= low + high:
        raise ValueError(f"need more than {low + high} rows to crop, got {n_rows}")
    return replace(
        spec,
        values=spec.values[low : n_rows - high].copy(),
        row_offset=spec.row_offset + low,
    )


def prepare(recording, params: SpectrogramParams = SpectrogramParams()) -> Spectrogram:
    """compute -> normalize -> crop, the image every later stage works on."""
    return crop_rows(normalize(compute_spectrogram(recording, params)))


def to_png(values: np.ndarray, path, boxes=(), gamma: float = 0.5) -> None:
    """Render a matrix as an 8-bit image with row 0 at the bottom.

    ``boxes`` are inclusive ``(r0, r1, c0, c1)`` rectangles drawn in red.
    """
    from PIL import Image, ImageDraw

    v = np.asarray(values, dtype=np.float64)
    peak = v.max() if v.size else 0.0
    if peak > 0:
        v = (v / peak) ** gamma
    img = Image.fromarray(np.flipud(np.round(v * 255).astype(np.uint8)), mode="L")
    if boxes:
        img = img.convert("RGB")
        draw = ImageDraw.Draw(img)
        n_rows = v.shape[0]
        for r0, r1, c0, c1 in boxes:
            draw.rectangle([c0, n_rows - 1 - r1, c1, n_rows - 1 - r0], outline=(255, 0, 0))
    img.save(path)
