"""Every tunable of the pipeline in one flat ``key = value`` file.

Blank lines and ``#`` comments are ignored.  Unknown keys are an error so a
typo cannot silently fall back to a default.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .segmentation import SegmentationParams
from .spectrogram import SpectrogramParams
from .synthgen import SyntheticConfig


@dataclass(frozen=True)
class PipelineConfig:
    # spectrogram
    window_size: int = 512
    hop: int = 128
    window_fn: str = "hann"
    # segmentation
    clip_factor: float = 3.0
    close_size: int = 3
    first_min_size: int = 10
    dilate_size: int = 4
    median_size: int = 3
    second_min_size: int = 100
    pad: int = 5
    connectivity: int = 8
    # matching / classification
    threshold: float = 0.4
    band_pad: int = 5
    # synthetic corpus
    recording_count: int = 50
    duration_s: float = 5.0
    labels_min: int = 2
    labels_max: int = 5
    min_segment_px: int = 0
    seed: int = 0
    # execution
    threads: int = 1

    @property
    def spectrogram(self) -> SpectrogramParams:
        return SpectrogramParams(self.window_size, self.hop, self.window_fn)

    @property
    def segmentation(self) -> SegmentationParams:
        return SegmentationParams(
            self.clip_factor, self.close_size, self.first_min_size, self.dilate_size,
            self.median_size, self.second_min_size, self.pad, self.connectivity,
        )

    @property
    def synthetic(self) -> SyntheticConfig:
        return SyntheticConfig(
            recording_count=self.recording_count, duration_s=self.duration_s,
            labels_min=self.labels_min, labels_max=self.labels_max,
            min_segment_px=self.min_segment_px, rng_seed=self.seed,
        )

    def updated(self, **overrides) -> "PipelineConfig":
        """Copy with string or typed overrides; ``None`` values are skipped."""
        types = {f.name: f.type for f in fields(self)}
        clean = {}
        for key, value in overrides.items():
            if value is None:
                continue
            if key not in types:
                raise KeyError(f"unknown config key {key!r}")
            clean[key] = _coerce(types[key], value, key)
        return replace(self, **clean)

    def dumps(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in fields(self))


def _coerce(type_name, value, key):
    name = type_name if isinstance(type_name, str) else type_name.__name__
    try:
        if name == "int":
            return int(value)
        if name == "float":
            return float(value)
    except ValueError as exc:
        raise ValueError(f"config key {key!r}: cannot parse {value!r} as {name}") from exc
    return str(value)


def parse_config(text: str, base: PipelineConfig = PipelineConfig()) -> PipelineConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return base.updated(**values)


def load_config(path) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
