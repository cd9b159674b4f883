"""Recordings, weak-label manifests and the corpus container.

A manifest is a UTF-8 CSV with header ``recording_id,labels``.  Labels are
``;``-separated and may be empty (noise-only recordings).  Each row refers to
``<recording_id>.wav`` in the manifest's directory.
"""
from __future__ import annotations

import csv
import os
import struct
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np
from scipy.io import wavfile


class CorpusError(Exception):
    """Base class for loading problems."""


class AudioDecodeError(CorpusError):
    """Audio file missing, truncated or otherwise unreadable."""


class UnsupportedEncodingError(CorpusError):
    """Readable WAV container holding a sample format we do not handle."""


class ManifestError(CorpusError):
    """Malformed manifest, duplicate ids or missing audio."""


@dataclass(frozen=True, eq=False)
class Recording:
    id: str
    samples: np.ndarray
    sample_rate: int
    weak_labels: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.id:
            raise ValueError("recording id must be non-empty")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if np.size(self.samples) == 0:
            raise ValueError(f"recording {self.id!r} has no samples")
        object.__setattr__(self, "weak_labels", frozenset(self.weak_labels))

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


class Corpus(Mapping):
    """Immutable id-indexed collection of recordings."""

    def __init__(self, recordings: Iterable[Recording] = ()):
        recs = {}
        for rec in recordings:
            if rec.id in recs:
                raise ManifestError(f"duplicate recording id {rec.id!r}")
            recs[rec.id] = rec
        self._recordings = recs

    def __getitem__(self, key: str) -> Recording:
        return self._recordings[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._recordings)

    def __len__(self) -> int:
        return len(self._recordings)

    def __repr__(self):
        return f"Corpus({len(self)} recordings)"

    @property
    def labels(self) -> dict:
        """Mapping of recording id to its weak label set."""
        return {rid: rec.weak_labels for rid, rec in self._recordings.items()}

    def all_labels(self) -> frozenset:
        out = set()
        for rec in self._recordings.values():
            out |= rec.weak_labels
        return frozenset(out)


_INT_SCALE = {
    np.dtype("int16"): 32768.0,
    np.dtype("int32"): 2147483648.0,
}


def _to_float(data: np.ndarray) -> np.ndarray:
    if data.dtype == np.uint8:
        return (data.astype(np.float64) - 128.0) / 128.0
    if data.dtype in _INT_SCALE:
        return data.astype(np.float64) / _INT_SCALE[data.dtype]
    if data.dtype in (np.float32, np.float64):
        return data.astype(np.float64)
    raise UnsupportedEncodingError(f"unsupported sample type {data.dtype}")


def load_recording(path, weak_labels: Iterable[str] = (), recording_id: str | None = None) -> Recording:
    """Read a PCM WAV file as a mono float recording in [-1, 1].

    Multi-channel audio is averaged to mono.  24-bit files come back from
    scipy left-justified in int32 and therefore share the int32 scale.
    """
    path = os.fspath(path)
    if recording_id is None:
        recording_id = os.path.splitext(os.path.basename(path))[0]
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError as exc:
        raise AudioDecodeError(f"{path}: no such file") from exc
    except ValueError as exc:
        msg = str(exc)
        if "Unknown wave file format" in msg or "Unsupported bit depth" in msg:
            raise UnsupportedEncodingError(f"{path}: {msg}") from exc
        raise AudioDecodeError(f"{path}: {msg}") from exc
    except (EOFError, OSError, struct.error) as exc:
        raise AudioDecodeError(f"{path}: {exc}") from exc
    samples = _to_float(np.asarray(data))
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if samples.size == 0:
        raise AudioDecodeError(f"{path}: no audio frames")
    return Recording(recording_id, samples, int(rate), frozenset(weak_labels))


def save_recording(rec: Recording, path) -> None:
    """Write ``rec`` as 16-bit PCM."""
    pcm = np.clip(np.round(rec.samples * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(os.fspath(path), rec.sample_rate, pcm)


def parse_labels(field_value: str) -> frozenset:
    return frozenset(lab.strip() for lab in field_value.split(";") if lab.strip())


def read_manifest(path) -> list:
    """Parse a manifest into ``[(recording_id, labels), ...]`` without touching audio."""
    rows = []
    seen = set()
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot open manifest {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["recording_id", "labels"]:
            raise ManifestError(f"{path}: expected header 'recording_id,labels'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 or not row[0].strip():
                raise ManifestError(f"{path}:{lineno}: malformed row {row!r}")
            rid = row[0].strip()
            if rid in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate recording id {rid!r}")
            seen.add(rid)
            rows.append((rid, parse_labels(row[1])))
    return rows


def write_manifest(rows: Iterable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["recording_id", "labels"])
        for rid, labels in rows:
            writer.writerow([rid, ";".join(sorted(labels))])


def load_manifest(path) -> Corpus:
    """Load every recording listed in a manifest, attaching its weak labels."""
    base = os.path.dirname(os.path.abspath(path))
    recordings = []
    for rid, labels in read_manifest(path):
        wav = os.path.join(base, rid + ".wav")
        if not os.path.exists(wav):
            raise ManifestError(f"missing audio file for {rid!r}: {wav}")
        recordings.append(load_recording(wav, labels, recording_id=rid))
    return Corpus(recordings)


def save_corpus(corpus: Corpus, directory) -> str:
    """Write a corpus as WAV files plus ``manifest.csv``; returns the manifest path."""
    os.makedirs(directory, exist_ok=True)
    for rec in corpus.values():
        save_recording(rec, os.path.join(directory, rec.id + ".wav"))
    manifest = os.path.join(directory, "manifest.csv")
    write_manifest(((rid, rec.weak_labels) for rid, rec in corpus.items()), manifest)
    return manifest


def single_label_species(corpus) -> frozenset:
    """Labels that occur as the only weak label of at least one recording.

    ``corpus`` may be a :class:`Corpus` or any mapping of id to label set.
    """
    labels = corpus.labels if isinstance(corpus, Corpus) else corpus
    return frozenset(next(iter(ls)) for ls in labels.values() if len(ls) == 1)
