"""Seeded synthetic evaluation corpora with exact ground truth.

Synthetic recordings live in the spectrogram domain: a time excerpt of a
noise recording's spectrogram with segments from single-label recordings
pasted onto it.  Patches keep their original rows and get a random time
position; planted boxes never overlap.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .corpus import single_label_species, write_manifest, read_manifest
from .segmentation import SegmentationParams, segment_spectrogram
from .spectrogram import Spectrogram, SpectrogramParams, normalize, prepare


class SynthesisError(Exception):
    pass


@dataclass(frozen=True)
class SyntheticConfig:
    recording_count: int = 50
    duration_s: float = 5.0
    labels_min: int = 2
    labels_max: int = 5
    min_segment_px: int = 0
    rng_seed: int = 0
    placement_attempts: int = 1000
    segment_redraws: int = 20

    def __post_init__(self):
        if self.recording_count < 1:
            raise ValueError("recording_count must be >= 1")
        if not 1 <= self.labels_min <= self.labels_max:
            raise ValueError("need 1 <= labels_min <= labels_max")
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")


@dataclass(frozen=True)
class Plant:
    label: str
    bbox: tuple
    source_segment: str
    source_recording: str

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "bbox": [int(b) for b in self.bbox],
            "source_segment": self.source_segment,
            "source_recording": self.source_recording,
        }


@dataclass
class SyntheticCorpus:
    spectra: dict
    labels: dict
    truth: dict
    background: dict = field(default_factory=dict)
    plantedness: dict = field(default_factory=dict)

    @property
    def exclusions(self) -> dict:
        """Source recordings of each synthetic recording's plants.

        Matching a planted patch against the recording it was cut from is a
        guaranteed perfect hit, so those recordings are left out.
        """
        return {rid: {p.source_recording for p in plants} for rid, plants in self.truth.items()}

    @property
    def n_plants(self) -> int:
        return sum(len(p) for p in self.truth.values())


def boxes_overlap(a, b) -> bool:
    return a[0] <= b[1] and b[0] <= a[1] and a[2] <= b[3] and b[2] <= a[3]


def paste_patch(background: Spectrogram, patch: np.ndarray, at) -> Spectrogram:
    """Pointwise max of ``patch`` onto ``background`` at ``at = (row, col)``, then renormalize."""
    r, c = at
    h, w = patch.shape
    n_rows, n_cols = background.values.shape
    if r < 0 or c < 0 or r + h > n_rows or c + w > n_cols:
        raise ValueError(f"patch {patch.shape} at {at} does not fit in {background.values.shape}")
    values = background.values.copy()
    np.maximum(values[r : r + h, c : c + w], patch, out=values[r : r + h, c : c + w])
    return normalize(replace(background, values=values))


def frames_for(duration_s: float, sample_rate: int, params: SpectrogramParams) -> int:
    return params.n_frames(int(round(duration_s * sample_rate)))


def synthesize(
    spectra: dict, labels: dict, segments: dict, cfg: SyntheticConfig, n_cols: int,
    seg_params: SegmentationParams | None = SegmentationParams(),
) -> SyntheticCorpus:
    """Build a synthetic corpus from prepared spectrograms and their segments.

    ``spectra`` and ``labels`` describe the source corpus; ``segments`` maps
    source recording ids to their detected segments.  Noise backgrounds are
    the recordings with no labels.  Only labels that have at least one
    segment of ``cfg.min_segment_px`` pixels or more are drawn.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    noise_ids = sorted(rid for rid, ls in labels.items() if not ls)
    if not noise_ids:
        raise SynthesisError("source corpus has no unlabelled noise recordings")

    singles = sorted(single_label_species(labels))
    pools = {}
    for lab in singles:
        pool = []
        for rid in sorted(labels):
            if labels[rid] != frozenset([lab]):
                continue
            for seg in segments.get(rid, ()):
                if seg.pixel_count >= cfg.min_segment_px and seg.patch.shape[1] <= n_cols:
                    pool.append(seg)
        if pool:
            pools[lab] = pool
    eligible = sorted(pools)
    if len(eligible) < cfg.labels_max:
        raise SynthesisError(
            f"need {cfg.labels_max} labels with qualifying segments, found {len(eligible)}"
        )

    out_spectra, out_labels, truth, background = {}, {}, {}, {}
    width = len(str(cfg.recording_count - 1))
    for i in range(cfg.recording_count):
        rid = f"synth{i:0{width}d}"
        bg_id = noise_ids[rng.integers(len(noise_ids))]
        bg = spectra[bg_id]
        total = bg.values.shape[1]
        cols = min(n_cols, total)
        start = int(rng.integers(total - cols + 1))
        current = normalize(
            Spectrogram(bg.values[:, start : start + cols].copy(), bg.params, bg.row_offset, rid)
        )
        background[rid] = (bg_id, start)

        k = int(rng.integers(cfg.labels_min, cfg.labels_max + 1))
        chosen = [eligible[j] for j in rng.choice(len(eligible), size=k, replace=False)]
        plants = []
        for lab in chosen:
            placed = None
            for _ in range(cfg.segment_redraws):
                seg = pools[lab][rng.integers(len(pools[lab]))]
                h, w = seg.patch.shape
                if w > cols:
                    continue
                row = seg.bbox[0]
                for _ in range(cfg.placement_attempts):
                    col = int(rng.integers(cols - w + 1))
                    box = (row, row + h - 1, col, col + w - 1)
                    if not any(boxes_overlap(box, p.bbox) for p in plants):
                        placed = (seg, box)
                        break
                if placed:
                    break
            if placed is None:
                raise SynthesisError(f"{rid}: could not place a segment for label {lab!r}")
            seg, box = placed
            current = paste_patch(current, seg.patch, (box[0], box[2]))
            plants.append(Plant(lab, box, seg.id, seg.recording_id))

        out_spectra[rid] = current
        out_labels[rid] = frozenset(chosen)
        truth[rid] = plants

    corpus = SyntheticCorpus(out_spectra, out_labels, truth, background)
    if seg_params is not None:
        corpus.plantedness = check_plantedness(corpus, seg_params)
    return corpus


def check_plantedness(corpus: SyntheticCorpus, seg_params: SegmentationParams = SegmentationParams()) -> dict:
    """For every plant, whether segmentation finds something overlapping it."""
    report = {}
    for rid in sorted(corpus.truth):
        found = [s.bbox for s in segment_spectrogram(corpus.spectra[rid], seg_params)]
        report[rid] = [any(boxes_overlap(p.bbox, b) for b in found) for p in corpus.truth[rid]]
    return report


def build_synthetic_corpus(
    source, cfg: SyntheticConfig = SyntheticConfig(),
    spec_params: SpectrogramParams = SpectrogramParams(),
    seg_params: SegmentationParams = SegmentationParams(),
    spectra: dict | None = None, segments: dict | None = None,
) -> SyntheticCorpus:
    """Synthetic corpus from an audio :class:`~weakbird.corpus.Corpus`.

    Precomputed ``spectra`` / ``segments`` of the source are reused when given.
    """
    if spectra is None:
        spectra = {rid: prepare(rec, spec_params) for rid, rec in source.items()}
    labels = source.labels
    if segments is None:
        segments = {
            rid: segment_spectrogram(spectra[rid], seg_params)
            for rid, ls in labels.items() if len(ls) == 1
        }
    rates = {rec.sample_rate for rec in source.values()}
    n_cols = max(frames_for(cfg.duration_s, rate, spec_params) for rate in rates)
    return synthesize(spectra, labels, segments, cfg, n_cols, seg_params)


def truth_to_json(truth: dict) -> list:
    return [
        {"recording_id": rid, "plants": [p.to_json() for p in truth[rid]]} for rid in sorted(truth)
    ]


def truth_from_json(obj: list) -> dict:
    out = {}
    for entry in obj:
        out[entry["recording_id"]] = [
            Plant(p["label"], tuple(p["bbox"]), p["source_segment"], p.get("source_recording", ""))
            for p in entry["plants"]
        ]
    return out


def save_synthetic(corpus: SyntheticCorpus, directory) -> None:
    """Write ``<id>.npy`` matrices, ``manifest.csv``, ``truth.json`` and ``meta.json``."""
    os.makedirs(directory, exist_ok=True)
    params = None
    for rid in sorted(corpus.spectra):
        spec = corpus.spectra[rid]
        params = spec.params
        np.save(os.path.join(directory, rid + ".npy"), spec.values, allow_pickle=False)
    write_manifest(((rid, corpus.labels[rid]) for rid in sorted(corpus.labels)),
                   os.path.join(directory, "manifest.csv"))
    with open(os.path.join(directory, "truth.json"), "w", encoding="utf-8") as fh:
        json.dump(truth_to_json(corpus.truth), fh, indent=1, sort_keys=True)
        fh.write("\n")
    row_offset = next(iter(corpus.spectra.values())).row_offset if corpus.spectra else 0
    meta = {
        "spectrogram": asdict(params) if params else None,
        "row_offset": row_offset,
        "background": {rid: list(v) for rid, v in sorted(corpus.background.items())},
        "plantedness": {rid: v for rid, v in sorted(corpus.plantedness.items())},
    }
    with open(os.path.join(directory, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_synthetic(directory) -> SyntheticCorpus:
    with open(os.path.join(directory, "meta.json"), encoding="utf-8") as fh:
        meta = json.load(fh)
    params = SpectrogramParams(**meta["spectrogram"]) if meta.get("spectrogram") else SpectrogramParams()
    labels = dict(read_manifest(os.path.join(directory, "manifest.csv")))
    spectra = {
        rid: Spectrogram(np.load(os.path.join(directory, rid + ".npy")), params, meta["row_offset"], rid)
        for rid in labels
    }
    truth_path = os.path.join(directory, "truth.json")
    truth = {}
    if os.path.exists(truth_path):
        with open(truth_path, encoding="utf-8") as fh:
            truth = truth_from_json(json.load(fh))
    background = {rid: tuple(v) for rid, v in meta.get("background", {}).items()}
    return SyntheticCorpus(spectra, labels, truth, background, meta.get("plantedness", {}))
